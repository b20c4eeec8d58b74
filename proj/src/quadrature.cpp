#include "tnn/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tnn {
namespace {

constexpr int kMaxPoints = 64;
constexpr int kMaxNewtonIterations = 100;
constexpr double kNewtonTolerance = 1e-15;

// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre_with_derivative(int n, double x) {
    double p_prev = 1.0;
    double p = x;
    for (int k = 2; k <= n; ++k) {
        const double next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
        p_prev = p;
        p = next;
    }
    const double dp = n * (x * p - p_prev) / (x * x - 1.0);
    return {p, dp};
}

}  // namespace

GaussRule gauss_legendre(int n) {
    if (n < 1 || n > kMaxPoints) {
        throw std::invalid_argument("gauss_legendre: n must be in [1, 64], got " + std::to_string(n));
    }
    GaussRule rule{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    if (n == 1) {
        rule.nodes(0) = 0.0;
        rule.weights(0) = 2.0;
        return rule;
    }

    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev-like guess for the i-th largest root.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < kMaxNewtonIterations; ++it) {
            const auto [p, d] = legendre_with_derivative(n, x);
            dp = d;
            const double step = p / d;
            x -= step;
            if (std::abs(step) <= kNewtonTolerance) break;
        }
        dp = legendre_with_derivative(n, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // i-th largest root goes to the top, its mirror to the bottom.
        rule.nodes(n - 1 - i) = x;
        rule.nodes(i) = -x;
        rule.weights(n - 1 - i) = w;
        rule.weights(i) = w;
    }
    if (n % 2 == 1) rule.nodes(n / 2) = 0.0;
    return rule;
}

Grid1D::Grid1D(double lo, double hi, int subintervals, int points_per_subinterval)
    : interval_{lo, hi}, subintervals_(subintervals), points_(points_per_subinterval) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw std::invalid_argument("composite_rule: need finite lo < hi");
    }
    if (subintervals < 1) {
        throw std::invalid_argument("composite_rule: subintervals must be positive");
    }
    const GaussRule ref = gauss_legendre(points_per_subinterval);
    const Eigen::Index total = Eigen::Index(subintervals) * points_per_subinterval;
    nodes_.resize(total);
    weights_.resize(total);

    const double h = (hi - lo) / subintervals;
    for (int s = 0; s < subintervals; ++s) {
        const double a = lo + s * h;
        const double mid = a + 0.5 * h;
        for (int k = 0; k < points_per_subinterval; ++k) {
            const Eigen::Index idx = Eigen::Index(s) * points_per_subinterval + k;
            nodes_(idx) = mid + 0.5 * h * ref.nodes(k);
            weights_(idx) = 0.5 * h * ref.weights(k);
        }
    }
}

Grid1D composite_rule(double lo, double hi, int subintervals, int n) {
    return Grid1D(lo, hi, subintervals, n);
}

double integrate_1d(const Grid1D& grid, std::span<const double> samples) {
    if (static_cast<Eigen::Index>(samples.size()) != grid.size()) {
        throw std::invalid_argument("integrate_1d: sample count " + std::to_string(samples.size()) +
                                    " does not match grid size " + std::to_string(grid.size()));
    }
    const Eigen::Map<const Eigen::VectorXd> s(samples.data(), grid.size());
    return grid.weights().dot(s);
}

}  // namespace tnn
