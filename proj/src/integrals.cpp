#include "tnn/integrals.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tnn/errors.hpp"
#include "tnn/parallel.hpp"
#include "tnn/separated.hpp"

namespace tnn {
namespace {

void check_aligned(const DualBatch& batch, const Grid1D& grid) {
    if (batch.values.cols() != grid.size() || batch.dvalues.cols() != grid.size() ||
        batch.values.rows() != batch.dvalues.rows()) {
        throw std::invalid_argument("batch shape (" + std::to_string(batch.values.rows()) + " x " +
                                    std::to_string(batch.values.cols()) +
                                    ") does not match grid of " + std::to_string(grid.size()) +
                                    " nodes");
    }
}

Eigen::VectorXd sample(const Grid1D& grid, const std::function<double(double)>& g) {
    Eigen::VectorXd s(grid.size());
    for (Eigen::Index n = 0; n < grid.size(); ++n) s(n) = g(grid.nodes()(n));
    return s;
}

void check_samples(const Eigen::VectorXd& s, const Grid1D& grid) {
    if (s.size() != grid.size()) throw std::invalid_argument("coefficient samples do not match grid");
    if (!s.allFinite()) throw NumericError("coefficient function is not finite on the grid");
}

// phi * diag(w) * phi^T, symmetrized exactly.
Eigen::MatrixXd weighted_outer(const Eigen::MatrixXd& phi, const Eigen::VectorXd& w) {
    Eigen::MatrixXd m = (phi.array().rowwise() * w.transpose().array()).matrix() * phi.transpose();
    return 0.5 * (m + m.transpose());
}

}  // namespace

// --- CpFunction ---------------------------------------------------------------

CpFunction& CpFunction::add_term(std::vector<Factor1D> factors) {
    if (static_cast<int>(factors.size()) != dimension_) {
        throw std::invalid_argument("CpFunction: term needs one factor per dimension");
    }
    terms_.push_back(std::move(factors));
    return *this;
}

const Factor1D& CpFunction::factor(int term, int dim) const {
    return terms_.at(static_cast<std::size_t>(term)).at(static_cast<std::size_t>(dim));
}

bool CpFunction::has_derivatives() const {
    for (const auto& term : terms_) {
        for (const auto& f : term) {
            if (!f.has_derivative()) return false;
        }
    }
    return true;
}

double CpFunction::evaluate(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dimension_) throw std::invalid_argument("CpFunction: bad point size");
    double total = 0.0;
    for (const auto& term : terms_) {
        double prod = 1.0;
        for (int i = 0; i < dimension_; ++i) {
            const Factor1D& f = term[static_cast<std::size_t>(i)];
            if (!f.is_one()) prod *= f.value(x[static_cast<std::size_t>(i)]);
        }
        total += prod;
    }
    return total;
}

Eigen::VectorXd CpFunction::gradient(std::span<const double> x) const {
    if (!has_derivatives()) throw std::invalid_argument("CpFunction: factor derivatives unavailable");
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dimension_);
    for (const auto& term : terms_) {
        for (int k = 0; k < dimension_; ++k) {
            const Factor1D& fk = term[static_cast<std::size_t>(k)];
            if (fk.is_one()) continue;
            double prod = fk.derivative(x[static_cast<std::size_t>(k)]);
            for (int i = 0; i < dimension_; ++i) {
                const Factor1D& f = term[static_cast<std::size_t>(i)];
                if (i != k && !f.is_one()) prod *= f.value(x[static_cast<std::size_t>(i)]);
            }
            g(k) += prod;
        }
    }
    return g;
}

SampledCp sample_cp(const CpFunction& f, std::span<const Grid1D> grids) {
    if (static_cast<int>(grids.size()) != f.dimension()) {
        throw std::invalid_argument("sample_cp: need one grid per dimension");
    }
    SampledCp s;
    s.dimension = f.dimension();
    s.values.resize(static_cast<std::size_t>(f.rank()));
    s.derivatives.resize(static_cast<std::size_t>(f.rank()));
    for (int t = 0; t < f.rank(); ++t) {
        auto& vals = s.values[static_cast<std::size_t>(t)];
        auto& ders = s.derivatives[static_cast<std::size_t>(t)];
        vals.resize(grids.size());
        ders.resize(grids.size());
        for (int i = 0; i < f.dimension(); ++i) {
            const Factor1D& factor = f.factor(t, i);
            const Grid1D& grid = grids[static_cast<std::size_t>(i)];
            if (factor.is_one()) continue;
            vals[static_cast<std::size_t>(i)] = sample(grid, factor.value);
            check_samples(*vals[static_cast<std::size_t>(i)], grid);
            if (factor.derivative) {
                ders[static_cast<std::size_t>(i)] = sample(grid, factor.derivative);
                check_samples(*ders[static_cast<std::size_t>(i)], grid);
            }
        }
    }
    return s;
}

// --- Grams --------------------------------------------------------------------

Eigen::MatrixXd gram_mass(const DualBatch& batch, const Grid1D& grid) {
    check_aligned(batch, grid);
    return weighted_outer(batch.values, grid.weights());
}

Eigen::MatrixXd gram_stiffness(const DualBatch& batch, const Grid1D& grid) {
    check_aligned(batch, grid);
    return weighted_outer(batch.dvalues, grid.weights());
}

Eigen::MatrixXd gram_weighted(const DualBatch& batch, const Grid1D& grid,
                              const Eigen::VectorXd& g_samples) {
    check_aligned(batch, grid);
    check_samples(g_samples, grid);
    return weighted_outer(batch.values, grid.weights().cwiseProduct(g_samples));
}

Eigen::MatrixXd gram_weighted(const DualBatch& batch, const Grid1D& grid,
                              const std::function<double(double)>& g) {
    return gram_weighted(batch, grid, sample(grid, g));
}

Eigen::VectorXd cross_vector(const DualBatch& batch, const Grid1D& grid,
                             const Eigen::VectorXd& g_samples, bool use_derivative) {
    check_aligned(batch, grid);
    check_samples(g_samples, grid);
    const Eigen::MatrixXd& phi = use_derivative ? batch.dvalues : batch.values;
    return phi * grid.weights().cwiseProduct(g_samples);
}

Eigen::VectorXd cross_vector(const DualBatch& batch, const Grid1D& grid,
                             const std::function<double(double)>& g, bool use_derivative) {
    return cross_vector(batch, grid, sample(grid, g), use_derivative);
}

double GramSet::total_log_scale() const {
    double total = 0.0;
    for (double s : log_scale) total += s;
    return total;
}

GramSet assemble_grams(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                       const SampledCp* potential) {
    const int d = static_cast<int>(batches.size());
    if (d == 0 || grids.size() != batches.size()) {
        throw std::invalid_argument("assemble_grams: need one batch and one grid per dimension");
    }
    if (potential && potential->dimension != d) {
        throw std::invalid_argument("assemble_grams: potential dimension mismatch");
    }

    GramSet grams;
    grams.mass.resize(static_cast<std::size_t>(d));
    grams.stiffness.resize(static_cast<std::size_t>(d));
    grams.log_scale.resize(static_cast<std::size_t>(d));
    const int q = potential ? potential->rank() : 0;
    grams.potential_rank = q;
    // per_dim[i] holds (term, Gram) pairs for dimension i.
    std::vector<std::vector<std::pair<int, Eigen::MatrixXd>>> per_dim(static_cast<std::size_t>(d));

    for_each_index(d, [&](int i) {
        const auto ui = static_cast<std::size_t>(i);
        const DualBatch& batch = batches[ui];
        const Grid1D& grid = grids[ui];
        Eigen::MatrixXd mass = gram_mass(batch, grid);
        double c = mass.diagonal().mean();
        if (!(c > 0.0) || !std::isfinite(c)) c = 1.0;
        grams.log_scale[ui] = std::log(c);
        grams.mass[ui] = mass / c;
        grams.stiffness[ui] = gram_stiffness(batch, grid) / c;
        for (int t = 0; t < q; ++t) {
            const auto& samples = potential->values[static_cast<std::size_t>(t)][ui];
            if (samples) per_dim[ui].emplace_back(t, gram_weighted(batch, grid, *samples) / c);
        }
    });

    for (int t = 0; t < q; ++t) grams.weighted[t];
    for (int i = 0; i < d; ++i) {
        for (auto& [t, m] : per_dim[static_cast<std::size_t>(i)]) {
            grams.weighted[t].emplace_back(i, std::move(m));
        }
    }
    return grams;
}

std::vector<SeparatedTerm> grad2_terms(const GramSet& grams) {
    std::vector<SeparatedTerm> terms(static_cast<std::size_t>(grams.dimension()));
    for (int i = 0; i < grams.dimension(); ++i) {
        terms[static_cast<std::size_t>(i)].factors.emplace_back(i, grams.stiffness[static_cast<std::size_t>(i)]);
    }
    return terms;
}

std::vector<SeparatedTerm> weighted_terms(const GramSet& grams) {
    std::vector<SeparatedTerm> terms(static_cast<std::size_t>(grams.potential_rank));
    for (int t = 0; t < grams.potential_rank; ++t) {
        auto it = grams.weighted.find(t);
        if (it != grams.weighted.end()) terms[static_cast<std::size_t>(t)].factors = it->second;
    }
    return terms;
}

LogScaled integral_psi2(const GramSet& grams) {
    const std::vector<SeparatedTerm> plain(1);
    return separated_sum(grams.mass, plain, false).value.scaled_log(grams.total_log_scale());
}

LogScaled integral_grad2(const GramSet& grams) {
    return separated_sum(grams.mass, grad2_terms(grams), false)
        .value.scaled_log(grams.total_log_scale());
}

LogScaled integral_weighted_psi2(const GramSet& grams, const CpFunction& v) {
    if (v.rank() != grams.potential_rank || v.dimension() != grams.dimension()) {
        throw std::invalid_argument("integral_weighted_psi2: Grams were not assembled for this function");
    }
    if (v.rank() == 0) return {};
    return separated_sum(grams.mass, weighted_terms(grams), false)
        .value.scaled_log(grams.total_log_scale());
}

// --- General product integral ---------------------------------------------------

LogScaled cp_product_integral(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                              const CpFunction& coeff, const FactorSpec& spec) {
    const int d = static_cast<int>(batches.size());
    const auto order = static_cast<int>(spec.factors.size());
    if (order > kMaxFactors) {
        throw CapabilityError("cp_product_integral: " + std::to_string(order) +
                              " factors exceed the supported maximum of " + std::to_string(kMaxFactors));
    }
    if (static_cast<int>(grids.size()) != d || coeff.dimension() != d) {
        throw std::invalid_argument("cp_product_integral: dimension mismatch");
    }
    for (int f : spec.factors) {
        if (f < FactorSpec::kPsi || f >= d) throw std::invalid_argument("cp_product_integral: bad factor index");
    }
    for (int i = 0; i < d; ++i) check_aligned(batches[static_cast<std::size_t>(i)], grids[static_cast<std::size_t>(i)]);

    const SampledCp samples = sample_cp(coeff, grids);
    LogScaled total;
    for (int t = 0; t < coeff.rank(); ++t) {
        ScaledMatrix product;
        for (int i = 0; i < d; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const DualBatch& batch = batches[ui];
            const Grid1D& grid = grids[ui];
            const Eigen::Index n = grid.size();
            // rows enumerate index tuples (j_1..j_T); columns are quadrature nodes.
            Eigen::MatrixXd rows = grid.weights().transpose();
            const auto& g = samples.values[static_cast<std::size_t>(t)][ui];
            if (g) rows.array().rowwise() *= g->transpose().array();
            for (int f : spec.factors) {
                const Eigen::MatrixXd& col = (f == i) ? batch.dvalues : batch.values;
                const Eigen::Index p = col.rows();
                Eigen::MatrixXd next(rows.rows() * p, n);
                for (Eigen::Index j = 0; j < p; ++j) {
                    next.middleRows(j * rows.rows(), rows.rows()) =
                        (rows.array().rowwise() * col.row(j).array()).matrix();
                }
                rows = std::move(next);
            }
            const Eigen::MatrixXd integral = rows.rowwise().sum();
            product = (i == 0) ? ScaledMatrix::from(integral) : hadamard(product, integral);
        }
        total = total + product.sum();
    }
    return total;
}

// --- Inner products with CP functions -------------------------------------------

namespace {

const Eigen::VectorXd& derivative_samples(const SampledCp& u, int t, int i) {
    const auto& d = u.derivatives[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
    if (!d) throw std::invalid_argument("CP function lacks the factor derivatives needed here");
    return *d;
}

}  // namespace

LogScaled inner_cp_psi(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                       const SampledCp& u, bool gradient) {
    const int d = static_cast<int>(batches.size());
    if (u.dimension != d || static_cast<int>(grids.size()) != d) {
        throw std::invalid_argument("inner_cp_psi: dimension mismatch");
    }
    LogScaled total;
    for (int t = 0; t < u.rank(); ++t) {
        std::vector<Eigen::MatrixXd> base(static_cast<std::size_t>(d));
        std::vector<SeparatedTerm> terms;
        if (!gradient) terms.emplace_back();
        for (int i = 0; i < d; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const DualBatch& batch = batches[ui];
            const Grid1D& grid = grids[ui];
            check_aligned(batch, grid);
            const auto& g = u.values[static_cast<std::size_t>(t)][ui];
            base[ui] = g ? cross_vector(batch, grid, *g, false)
                         : Eigen::VectorXd(batch.values * grid.weights());
            if (gradient && g) {
                SeparatedTerm term;
                term.factors.emplace_back(i, cross_vector(batch, grid, derivative_samples(u, t, i), true));
                terms.push_back(std::move(term));
            }
        }
        if (terms.empty()) continue;
        total = total + separated_sum(base, terms, false).value;
    }
    return total;
}

LogScaled inner_cp_cp(const SampledCp& u, const SampledCp& v, std::span<const Grid1D> grids,
                      bool gradient) {
    const int d = static_cast<int>(grids.size());
    if (u.dimension != d || v.dimension != d) throw std::invalid_argument("inner_cp_cp: dimension mismatch");

    auto pair_integral = [&](const std::optional<Eigen::VectorXd>& a,
                             const std::optional<Eigen::VectorXd>& b, const Grid1D& grid) {
        Eigen::VectorXd w = grid.weights();
        if (a) w = w.cwiseProduct(*a);
        if (b) w = w.cwiseProduct(*b);
        return w.sum();
    };

    LogScaled total;
    for (int s = 0; s < u.rank(); ++s) {
        for (int t = 0; t < v.rank(); ++t) {
            std::vector<Eigen::MatrixXd> base(static_cast<std::size_t>(d), Eigen::MatrixXd(1, 1));
            std::vector<SeparatedTerm> terms;
            if (!gradient) terms.emplace_back();
            for (int i = 0; i < d; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                const auto& a = u.values[static_cast<std::size_t>(s)][ui];
                const auto& b = v.values[static_cast<std::size_t>(t)][ui];
                base[ui](0, 0) = pair_integral(a, b, grids[ui]);
                if (gradient && a && b) {
                    Eigen::MatrixXd m(1, 1);
                    m(0, 0) = pair_integral(derivative_samples(u, s, i), derivative_samples(v, t, i),
                                            grids[ui]);
                    SeparatedTerm term;
                    term.factors.emplace_back(i, m);
                    terms.push_back(std::move(term));
                }
            }
            if (terms.empty()) continue;
            total = total + separated_sum(base, terms, false).value;
        }
    }
    return total;
}

}  // namespace tnn
