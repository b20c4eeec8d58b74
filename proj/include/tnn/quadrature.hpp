#pragma once

#include <span>

#include <Eigen/Core>

namespace tnn {

/// Closed coordinate interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double length() const noexcept { return hi - lo; }
    bool contains(double x) const noexcept { return x >= lo && x <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Gauss–Legendre rule on the reference interval [-1, 1].
struct GaussRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// n-point Gauss–Legendre rule, 1 <= n <= 64. Nodes ascending.
GaussRule gauss_legendre(int n);

/// Composite Gauss–Legendre rule on equal subintervals of one coordinate.
///
/// Immutable once built; training evaluates the networks only at these nodes.
class Grid1D {
public:
    Grid1D(double lo, double hi, int subintervals, int points_per_subinterval);

    double lo() const noexcept { return interval_.lo; }
    double hi() const noexcept { return interval_.hi; }
    const Interval& interval() const noexcept { return interval_; }
    int subintervals() const noexcept { return subintervals_; }
    int points_per_subinterval() const noexcept { return points_; }

    const Eigen::VectorXd& nodes() const noexcept { return nodes_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    Eigen::Index size() const noexcept { return nodes_.size(); }

private:
    Interval interval_;
    int subintervals_;
    int points_;
    Eigen::VectorXd nodes_;
    Eigen::VectorXd weights_;
};

Grid1D composite_rule(double lo, double hi, int subintervals, int n);

/// Weighted sum of samples aligned with grid.nodes().
double integrate_1d(const Grid1D& grid, std::span<const double> samples);

}  // namespace tnn
