#include "tnn/checks.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "tnn/integrals.hpp"
#include "tnn/oracles.hpp"
#include "tnn/problems.hpp"
#include "tnn/training.hpp"

namespace tnn::checks {
namespace {

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

double rel(double a, double b) {
    const double denom = std::max(std::abs(b), 1e-300);
    return std::abs(a - b) / denom;
}

// Gradient check floor: entries below this fraction of the largest are compared absolutely.
constexpr double kGradientFloor = 1e-6;

}  // namespace

CheckResult quadrature_exactness(int max_n, double tolerance) {
    CheckResult r{"quadrature exactness", true, {}};
    double worst = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        const GaussRule rule = gauss_legendre(n);
        const Grid1D unit(0.0, 1.0, 1, n);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            // [-1, 1]: odd moments vanish, so measure those against the scale 1.
            const double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
            const double got = (rule.nodes.array().pow(k) * rule.weights.array()).sum();
            worst = std::max(worst, std::abs(got - exact) / std::max(std::abs(exact), 1.0));
            const double got01 = (unit.nodes().array().pow(k) * unit.weights().array()).sum();
            worst = std::max(worst, rel(got01, 1.0 / (k + 1)));
        }
    }
    r.passed = worst <= tolerance;
    r.detail = "n <= " + std::to_string(max_n) + ", max relative error " + sci(worst);
    return r;
}

CheckResult oracle_equivalence(int cases, std::uint64_t seed, double tolerance) {
    CheckResult r{"oracle equivalence", true, {}};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick_d(2, 3), pick_p(1, 3), pick_sub(1, 3), pick_pts(2, 4);
    std::uniform_real_distribution<double> pick_lo(-1.5, 0.5), pick_len(0.5, 2.5);
    std::bernoulli_distribution dirichlet(0.5), sine(0.3);
    double worst = 0.0;
    std::string worst_what;
    for (int c = 0; c < cases; ++c) {
        const int d = pick_d(rng), p = pick_p(rng);
        std::vector<Interval> domain;
        std::vector<Grid1D> grids;
        for (int i = 0; i < d; ++i) {
            const double lo = pick_lo(rng);
            domain.push_back({lo, lo + pick_len(rng)});
            grids.emplace_back(domain.back().lo, domain.back().hi, pick_sub(rng), pick_pts(rng));
        }
        const TnnModel model = oracle::random_model(d, p, 2, 4, sine(rng) ? Activation::sine : Activation::tanh,
                                                    dirichlet(rng) ? Boundary::dirichlet : Boundary::none,
                                                    domain, rng());
        const auto batches = evaluate_grid(model, grids);
        const CpFunction v = oracle::random_cp(d, 2, rng());
        const CpFunction f = oracle::random_cp(d, 3, rng());
        const SampledCp vs = sample_cp(v, grids), fs = sample_cp(f, grids);
        const GramSet grams = assemble_grams(batches, grids, &vs);
        FactorSpec spec;
        spec.factors = {FactorSpec::kPsi, static_cast<int>(rng() % static_cast<unsigned>(d)), FactorSpec::kPsi};
        const CpFunction coeff = oracle::random_cp(d, 2, rng());

        const std::pair<const char*, double> errs[] = {
            {"psi2", rel(integral_psi2(grams).value(), oracle::psi2(batches, grids))},
            {"grad2", rel(integral_grad2(grams).value(), oracle::grad2(batches, grids))},
            {"weighted", rel(integral_weighted_psi2(grams, v).value(), oracle::weighted_psi2(batches, grids, v))},
            {"load", rel(inner_cp_psi(batches, grids, fs, false).value(), oracle::load(batches, grids, f))},
            {"product3", rel(cp_product_integral(batches, grids, coeff, spec).value(),
                             oracle::product(batches, grids, coeff, spec))},
        };
        for (const auto& [what, e] : errs) {
            if (!(e <= worst)) {
                worst = e;
                worst_what = std::string(what) + " case " + std::to_string(c);
            }
        }
    }
    r.passed = worst <= tolerance;
    r.detail = std::to_string(cases) + " cases, max relative error " + sci(worst) +
               (worst_what.empty() ? "" : " (" + worst_what + ")");
    return r;
}

CheckResult gradient_correctness(double step, double tolerance) {
    CheckResult r{"gradient correctness", true, {}};
    std::ostringstream detail;
    std::uint64_t seed = 11;
    for (const char* name : {"laplace", "harmonic", "coupled", "neumann"}) {
        const Problem problem = make_problem(name, 2);
        std::vector<Grid1D> grids;
        for (const Interval& iv : problem.domain) grids.emplace_back(iv.lo, iv.hi, 4, 4);
        const Objective objective(problem, grids);
        const TnnModel model =
            oracle::random_model(2, 2, 2, 4, Activation::tanh, problem.boundary(), problem.domain, seed++);
        const ModelGradient analytic = objective.evaluate(model, true).gradient;
        const ModelGradient fd = oracle::finite_difference_gradient(
            model, [&](const TnnModel& m) { return objective.evaluate(m, false).report.loss; }, step);
        const oracle::GradientComparison cmp = oracle::compare_gradients(analytic, fd, kGradientFloor);
        detail << name << " " << sci(cmp.max_relative_error) << "; ";
        if (!(cmp.max_relative_error <= tolerance)) r.passed = false;
    }
    r.detail = detail.str();
    r.detail.resize(r.detail.size() - 2);
    return r;
}

CheckResult jet_consistency(int seeds, double tolerance) {
    CheckResult r{"jet consistency", true, {}};
    double worst = 0.0;
    const double h = 1e-5;
    for (int s = 0; s < seeds; ++s) {
        const Interval iv{-1.0, 2.0};
        const Activation act = (s % 2) ? Activation::sine : Activation::tanh;
        const Boundary bc = (s % 3 == 0) ? Boundary::none : Boundary::dirichlet;
        const TnnModel model = oracle::random_model(1, 3, 2, 6, act, bc, std::span(&iv, 1), 1000 + s);
        Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(9, -0.9, 1.9);
        const DualBatch mid = forward_dual(model.subnet(0), xs);
        const DualBatch up = forward_dual(model.subnet(0), (xs.array() + h).matrix());
        const DualBatch down = forward_dual(model.subnet(0), (xs.array() - h).matrix());
        const Eigen::MatrixXd fd = (up.values - down.values) / (2.0 * h);
        const double scale = std::max(1.0, mid.dvalues.cwiseAbs().maxCoeff());
        worst = std::max(worst, (fd - mid.dvalues).cwiseAbs().maxCoeff() / scale);
    }
    r.passed = worst <= tolerance;
    r.detail = std::to_string(seeds) + " nets, max scaled error " + sci(worst);
    return r;
}

std::vector<CheckResult> quick_suite() {
    return {quadrature_exactness(20, 1e-12), oracle_equivalence(50, 2024, 1e-10),
            gradient_correctness(1e-5, 1e-5), jet_consistency(100, 1e-7)};
}

}  // namespace tnn::checks
