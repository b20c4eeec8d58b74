#include "tnn/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace tnn::oracle {

GaussRule golub_welsch(int n) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    GaussRule rule;
    rule.nodes = solver.eigenvalues();
    rule.weights = 2.0 * solver.eigenvectors().row(0).transpose().array().square();
    return rule;
}

Eigen::MatrixXd naive_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::VectorXd& w) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < a.rows(); ++j)
        for (Eigen::Index k = 0; k < b.rows(); ++k)
            for (Eigen::Index n = 0; n < w.size(); ++n) g(j, k) += w(n) * a(j, n) * b(k, n);
    return g;
}

double psi_at(std::span<const DualBatch> batches, std::span<const Eigen::Index> idx) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < batches[0].rank(); ++j) {
        double prod = 1.0;
        for (std::size_t i = 0; i < batches.size(); ++i) prod *= batches[i].values(j, idx[i]);
        total += prod;
    }
    return total;
}

double dpsi_at(std::span<const DualBatch> batches, std::span<const Eigen::Index> idx, int k) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < batches[0].rank(); ++j) {
        double prod = 1.0;
        for (std::size_t i = 0; i < batches.size(); ++i) {
            prod *= (static_cast<int>(i) == k ? batches[i].dvalues : batches[i].values)(j, idx[i]);
        }
        total += prod;
    }
    return total;
}

double full_grid(std::span<const Grid1D> grids,
                 const std::function<double(std::span<const Eigen::Index>, std::span<const double>)>& f) {
    const std::size_t d = grids.size();
    std::vector<Eigen::Index> idx(d, 0);
    std::vector<double> x(d);
    double total = 0.0;
    while (true) {
        double w = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            w *= grids[i].weights()(idx[i]);
            x[i] = grids[i].nodes()(idx[i]);
        }
        total += w * f(idx, x);
        std::size_t i = 0;
        while (i < d && ++idx[i] == grids[i].size()) idx[i++] = 0;
        if (i == d) break;
    }
    return total;
}

double psi2(std::span<const DualBatch> batches, std::span<const Grid1D> grids) {
    return full_grid(grids, [&](auto idx, auto) {
        const double p = psi_at(batches, idx);
        return p * p;
    });
}

double grad2(std::span<const DualBatch> batches, std::span<const Grid1D> grids) {
    return full_grid(grids, [&](auto idx, auto) {
        double s = 0.0;
        for (std::size_t k = 0; k < batches.size(); ++k) {
            const double g = dpsi_at(batches, idx, static_cast<int>(k));
            s += g * g;
        }
        return s;
    });
}

double weighted_psi2(std::span<const DualBatch> batches, std::span<const Grid1D> grids, const CpFunction& v) {
    return full_grid(grids, [&](auto idx, auto x) {
        const double p = psi_at(batches, idx);
        return v.evaluate(x) * p * p;
    });
}

double load(std::span<const DualBatch> batches, std::span<const Grid1D> grids, const CpFunction& f) {
    return full_grid(grids, [&](auto idx, auto x) { return f.evaluate(x) * psi_at(batches, idx); });
}

double product(std::span<const DualBatch> batches, std::span<const Grid1D> grids, const CpFunction& coeff,
               const FactorSpec& spec) {
    return full_grid(grids, [&](auto idx, auto x) {
        double prod = coeff.evaluate(x);
        for (int f : spec.factors) prod *= (f == FactorSpec::kPsi) ? psi_at(batches, idx) : dpsi_at(batches, idx, f);
        return prod;
    });
}

double inner_u_psi(std::span<const DualBatch> batches, std::span<const Grid1D> grids, const CpFunction& u,
                   bool gradient) {
    return full_grid(grids, [&](auto idx, auto x) {
        if (!gradient) return u.evaluate(x) * psi_at(batches, idx);
        const Eigen::VectorXd g = u.gradient(x);
        double s = 0.0;
        for (std::size_t k = 0; k < batches.size(); ++k) s += g(static_cast<Eigen::Index>(k)) * dpsi_at(batches, idx, static_cast<int>(k));
        return s;
    });
}

double inner_u_u(std::span<const Grid1D> grids, const CpFunction& u, const CpFunction& v, bool gradient) {
    return full_grid(grids, [&](auto, auto x) {
        if (!gradient) return u.evaluate(x) * v.evaluate(x);
        return u.gradient(x).dot(v.gradient(x));
    });
}

double rayleigh(std::span<const DualBatch> batches, std::span<const Grid1D> grids, const CpFunction* v) {
    double num = grad2(batches, grids);
    if (v) num += weighted_psi2(batches, grids, *v);
    return num / psi2(batches, grids);
}

double ritz(std::span<const DualBatch> batches, std::span<const Grid1D> grids, const CpFunction& f,
            double reaction) {
    return 0.5 * grad2(batches, grids) + 0.5 * reaction * psi2(batches, grids) - load(batches, grids, f);
}

double projection_error(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                        const CpFunction& u, bool gradient) {
    const double up = inner_u_psi(batches, grids, u, gradient);
    const double uu = inner_u_u(grids, u, u, gradient);
    const double pp = gradient ? grad2(batches, grids) : psi2(batches, grids);
    return std::sqrt(std::max(0.0, 1.0 - up * up / (uu * pp)));
}

std::pair<double, double> bvp_errors(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                                     const CpFunction& u, const CpFunction& f) {
    auto err = [&](bool gradient) {
        const double diff = full_grid(grids, [&](auto idx, auto x) {
            if (!gradient) {
                const double e = u.evaluate(x) - psi_at(batches, idx);
                return e * e;
            }
            const Eigen::VectorXd g = u.gradient(x);
            double s = 0.0;
            for (std::size_t k = 0; k < batches.size(); ++k) {
                const double e = g(static_cast<Eigen::Index>(k)) - dpsi_at(batches, idx, static_cast<int>(k));
                s += e * e;
            }
            return s;
        });
        return std::sqrt(diff / inner_u_u(grids, f, f, gradient));
    };
    return {err(false), err(true)};
}

ModelGradient finite_difference_gradient(const TnnModel& model,
                                         const std::function<double(const TnnModel&)>& loss, double h) {
    ModelGradient out;
    TnnModel probe = model;
    for (int i = 0; i < model.dimension(); ++i) {
        ParamGradient g = ParamGradient::zeros_like(model.subnet(i));
        for (std::size_t l = 0; l < model.subnet(i).layers.size(); ++l) {
            auto fd = [&](double& param, double& slot) {
                const double keep = param;
                param = keep + h;
                const double up = loss(probe);
                param = keep - h;
                const double down = loss(probe);
                param = keep;
                slot = (up - down) / (2.0 * h);
            };
            DenseLayer& layer = probe.subnet(i).layers[l];
            for (Eigen::Index k = 0; k < layer.weight.size(); ++k) fd(layer.weight.data()[k], g.layers[l].weight.data()[k]);
            for (Eigen::Index k = 0; k < layer.bias.size(); ++k) fd(layer.bias(k), g.layers[l].bias(k));
        }
        out.push_back(std::move(g));
    }
    return out;
}

GradientComparison compare_gradients(const ModelGradient& analytic, const ModelGradient& reference,
                                     double floor_fraction) {
    if (analytic.size() != reference.size()) throw std::invalid_argument("compare_gradients: size mismatch");
    GradientComparison c;
    for (const auto& g : reference)
        for (const auto& l : g.layers)
            c.gradient_norm_inf = std::max({c.gradient_norm_inf, l.weight.cwiseAbs().maxCoeff(),
                                            l.bias.cwiseAbs().maxCoeff()});
    const double floor = floor_fraction * c.gradient_norm_inf;
    auto visit = [&](double a, double b) {
        const double err = std::abs(a - b);
        c.max_abs_error = std::max(c.max_abs_error, err);
        const double denom = std::max({std::abs(a), std::abs(b), floor});
        if (denom > 0.0) c.max_relative_error = std::max(c.max_relative_error, err / denom);
    };
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        for (std::size_t l = 0; l < analytic[i].layers.size(); ++l) {
            const auto& a = analytic[i].layers[l];
            const auto& b = reference[i].layers.at(l);
            for (Eigen::Index k = 0; k < a.weight.size(); ++k) visit(a.weight.data()[k], b.weight.data()[k]);
            for (Eigen::Index k = 0; k < a.bias.size(); ++k) visit(a.bias(k), b.bias(k));
        }
    }
    return c;
}

CpFunction random_cp(int dimension, int rank, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_int_distribution<int> freq(1, 3);
    std::bernoulli_distribution keep(0.75);
    CpFunction f(dimension);
    for (int t = 0; t < rank; ++t) {
        std::vector<Factor1D> factors;
        for (int i = 0; i < dimension; ++i) {
            if (!keep(rng)) {
                factors.push_back(Factor1D::one());
                continue;
            }
            const double a = coef(rng), b = coef(rng), c = coef(rng), s = coef(rng);
            const int k = freq(rng);
            factors.push_back({[=](double x) { return a + b * x + c * x * x + s * std::sin(k * x); },
                               [=](double x) { return b + 2.0 * c * x + s * k * std::cos(k * x); }});
        }
        f.add_term(std::move(factors));
    }
    return f;
}

TnnModel random_model(int dimension, int rank, int depth, int width, Activation activation,
                      Boundary boundary, std::span<const Interval> domain, std::uint64_t seed) {
    ModelOptions o;
    o.dimension = dimension;
    o.rank = rank;
    o.depth = depth;
    o.width = width;
    o.activation = activation;
    o.boundary = boundary;
    TnnModel model = init_model(o, domain, seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (auto& net : model.subnets()) {
        for (auto& layer : net.layers) {
            for (Eigen::Index k = 0; k < layer.weight.size(); ++k) layer.weight.data()[k] += noise(rng);
            for (Eigen::Index k = 0; k < layer.bias.size(); ++k) layer.bias(k) += noise(rng);
        }
    }
    return model;
}

}  // namespace tnn::oracle
