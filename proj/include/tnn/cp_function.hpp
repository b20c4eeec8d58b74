#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tnn/quadrature.hpp"

namespace tnn {

/// One-dimensional factor of a CP term. An empty `value` means "identically one".
struct Factor1D {
    std::function<double(double)> value;
    std::function<double(double)> derivative;

    static Factor1D one() { return {}; }
    bool is_one() const noexcept { return !static_cast<bool>(value); }
    bool has_derivative() const noexcept { return is_one() || static_cast<bool>(derivative); }
};

/// f(x) = sum_l prod_i factor(l, i)(x_i): a rank-q separable function on R^d.
class CpFunction {
public:
    explicit CpFunction(int dimension = 0) : dimension_(dimension) {}

    /// Appends a term; `factors` must have one entry per dimension.
    CpFunction& add_term(std::vector<Factor1D> factors);

    int dimension() const noexcept { return dimension_; }
    int rank() const noexcept { return static_cast<int>(terms_.size()); }
    const Factor1D& factor(int term, int dim) const;
    bool has_derivatives() const;

    double evaluate(std::span<const double> x) const;
    /// Partial derivatives; requires has_derivatives().
    Eigen::VectorXd gradient(std::span<const double> x) const;

private:
    int dimension_;
    std::vector<std::vector<Factor1D>> terms_;
};

/// Factor samples at grid nodes. nullopt marks an identically-one factor.
struct SampledCp {
    int dimension = 0;
    std::vector<std::vector<std::optional<Eigen::VectorXd>>> values;       // [term][dim]
    std::vector<std::vector<std::optional<Eigen::VectorXd>>> derivatives;  // [term][dim]

    int rank() const noexcept { return static_cast<int>(values.size()); }
};

/// Samples every factor on its grid. Throws NumericError on non-finite samples.
SampledCp sample_cp(const CpFunction& f, std::span<const Grid1D> grids);

}  // namespace tnn
