#include "tnn/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "tnn/errors.hpp"
#include "tnn/integrals.hpp"

namespace tnn {
namespace {

constexpr double kPi = std::numbers::pi;

void require_dimension(int d, int minimum, const char* what) {
    if (d < minimum) {
        throw std::invalid_argument(std::string(what) + ": dimension must be at least " +
                                    std::to_string(minimum));
    }
}

Factor1D square_factor() {
    return {[](double x) { return x * x; }, [](double x) { return 2.0 * x; }};
}

Factor1D linear_factor(double slope) {
    return {[slope](double x) { return slope * x; }, [slope](double) { return slope; }};
}

// Rank-d sum with `f` in dimension l of term l and ones elsewhere.
CpFunction diagonal_sum(int d, const Factor1D& f) {
    CpFunction cp(d);
    for (int l = 0; l < d; ++l) {
        std::vector<Factor1D> factors(static_cast<std::size_t>(d), Factor1D::one());
        factors[static_cast<std::size_t>(l)] = f;
        cp.add_term(std::move(factors));
    }
    return cp;
}

CpFunction rank_one(int d, const Factor1D& f) {
    return CpFunction(d).add_term(std::vector<Factor1D>(static_cast<std::size_t>(d), f));
}

void require_model_grids(std::span<const DualBatch> batches, std::span<const Grid1D> grids) {
    if (batches.size() != grids.size() || batches.empty()) {
        throw std::invalid_argument("metric: need one batch and one grid per dimension");
    }
}

LogScaled psi_norm2(std::span<const DualBatch> batches, std::span<const Grid1D> grids, bool gradient) {
    const GramSet grams = assemble_grams(batches, grids);
    LogScaled value = gradient ? integral_grad2(grams) : integral_psi2(grams);
    if (value.is_zero() || !std::isfinite(value.log_abs())) {
        throw DegenerateModelError("trial function has vanishing norm");
    }
    return value;
}

double projection_error(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                        const SampledCp& u, bool gradient) {
    require_model_grids(batches, grids);
    const LogScaled pp = psi_norm2(batches, grids, gradient);
    const LogScaled up = inner_cp_psi(batches, grids, u, gradient);
    const LogScaled uu = inner_cp_cp(u, u, grids, gradient);
    if (uu.is_zero()) throw std::invalid_argument("projection error: reference function has zero norm");
    const double cos2 = ratio(up * up, uu * pp);
    return std::sqrt(std::max(0.0, 1.0 - cos2));
}

}  // namespace

Problem make_laplace(int d) {
    require_dimension(d, 1, "make_laplace");
    Problem p;
    p.name = "laplace";
    p.kind = ProblemKind::eigen_dirichlet;
    p.domain.assign(static_cast<std::size_t>(d), Interval{0.0, 1.0});
    p.exact_eigenvalue = d * kPi * kPi;
    p.exact_solution = rank_one(d, {[](double x) { return std::sin(kPi * x); },
                                    [](double x) { return kPi * std::cos(kPi * x); }});
    return p;
}

Problem make_harmonic(int d, Interval truncation) {
    require_dimension(d, 1, "make_harmonic");
    Problem p;
    p.name = "harmonic";
    p.kind = ProblemKind::eigen_dirichlet;
    p.domain.assign(static_cast<std::size_t>(d), truncation);
    p.potential = diagonal_sum(d, square_factor());
    p.exact_eigenvalue = static_cast<double>(d);
    p.exact_solution = rank_one(d, {[](double x) { return std::exp(-0.5 * x * x); },
                                    [](double x) { return -x * std::exp(-0.5 * x * x); }});
    return p;
}

Problem make_coupled(int d, Interval truncation) {
    require_dimension(d, 2, "make_coupled");
    Problem p;
    p.name = "coupled";
    p.kind = ProblemKind::eigen_dirichlet;
    p.domain.assign(static_cast<std::size_t>(d), truncation);
    CpFunction v = diagonal_sum(d, square_factor());
    for (int i = 0; i + 1 < d; ++i) {
        std::vector<Factor1D> factors(static_cast<std::size_t>(d), Factor1D::one());
        factors[static_cast<std::size_t>(i)] = linear_factor(-1.0);
        factors[static_cast<std::size_t>(i + 1)] = linear_factor(1.0);
        v.add_term(std::move(factors));
    }
    p.potential = std::move(v);
    p.exact_eigenvalue = coupled_ground_energy(d);
    return p;
}

Problem make_neumann_bvp(int d) {
    require_dimension(d, 1, "make_neumann_bvp");
    Problem p;
    p.name = "neumann";
    p.kind = ProblemKind::bvp_neumann;
    p.domain.assign(static_cast<std::size_t>(d), Interval{0.0, 1.0});
    const double a = 2.0 * kPi * kPi;
    p.rhs = diagonal_sum(d, {[a](double x) { return a * std::cos(kPi * x); },
                             [a](double x) { return -a * kPi * std::sin(kPi * x); }});
    p.reaction = kPi * kPi;
    p.exact_solution = diagonal_sum(d, {[](double x) { return std::cos(kPi * x); },
                                        [](double x) { return -kPi * std::sin(kPi * x); }});
    return p;
}

Problem make_problem(const std::string& name, int d, Interval truncation) {
    if (name == "laplace") return make_laplace(d);
    if (name == "harmonic") return make_harmonic(d, truncation);
    if (name == "coupled") return make_coupled(d, truncation);
    if (name == "neumann") return make_neumann_bvp(d);
    throw std::invalid_argument("unknown problem '" + name + "'");
}

double coupled_ground_energy(int d) {
    require_dimension(d, 1, "coupled_ground_energy");
    double sum = 0.0;
    for (int i = 1; i <= d; ++i) sum += std::sqrt(1.0 - std::cos(i * kPi / (d + 1)));
    return sum;
}

double error_lambda(double estimate, double exact) {
    if (exact == 0.0) throw std::invalid_argument("error_lambda: exact eigenvalue is zero");
    return std::abs(estimate - exact) / std::abs(exact);
}

double error_l2_projection(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                           const SampledCp& u) {
    return projection_error(batches, grids, u, false);
}

double error_h1_projection(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                           const SampledCp& u) {
    return projection_error(batches, grids, u, true);
}

double error_l2_projection(const TnnModel& model, std::span<const Grid1D> grids, const CpFunction& u) {
    const auto batches = evaluate_grid(model, grids);
    return error_l2_projection(batches, grids, sample_cp(u, grids));
}

double error_h1_projection(const TnnModel& model, std::span<const Grid1D> grids, const CpFunction& u) {
    const auto batches = evaluate_grid(model, grids);
    return error_h1_projection(batches, grids, sample_cp(u, grids));
}

BvpErrors error_bvp(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                    const SampledCp& u, const SampledCp& f) {
    require_model_grids(batches, grids);
    const GramSet grams = assemble_grams(batches, grids);
    BvpErrors out;
    for (bool gradient : {false, true}) {
        const LogScaled ff = inner_cp_cp(f, f, grids, gradient);
        if (ff.is_zero()) throw std::invalid_argument("error_bvp: right-hand side has zero norm");
        const LogScaled pp = gradient ? integral_grad2(grams) : integral_psi2(grams);
        const LogScaled diff = inner_cp_cp(u, u, grids, gradient) -
                               2.0 * inner_cp_psi(batches, grids, u, gradient) + pp;
        const double e = std::sqrt(std::max(0.0, ratio(diff, ff)));
        (gradient ? out.h1 : out.l2) = e;
    }
    return out;
}

BvpErrors error_bvp(const TnnModel& model, std::span<const Grid1D> grids, const CpFunction& u,
                    const CpFunction& f) {
    const auto batches = evaluate_grid(model, grids);
    return error_bvp(batches, grids, sample_cp(u, grids), sample_cp(f, grids));
}

}  // namespace tnn
