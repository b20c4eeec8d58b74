#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tnn/quadrature.hpp"

namespace tnn {

enum class Activation { tanh, sine };
enum class Boundary { none, dirichlet };

std::string_view to_string(Activation a);
std::string_view to_string(Boundary b);
Activation parse_activation(std::string_view name);
Boundary parse_boundary(std::string_view name);

/// Affine map out = weight * in + bias; weight is (out x in).
struct DenseLayer {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
};

/// One-dimensional network R -> R^p for a single coordinate.
///
/// The activation follows every layer except the last. The emitted values are
///   output_scale * beta(x) * (last affine layer)
/// with beta(x) = (x - lo)(hi - x) for Dirichlet decoration and beta = 1 otherwise,
/// so Dirichlet outputs vanish exactly at both interval ends.
struct SubNetwork {
    Interval interval;
    std::vector<DenseLayer> layers;
    Activation activation = Activation::tanh;
    Boundary boundary = Boundary::none;
    double output_scale = 1.0;

    Eigen::Index rank() const { return layers.empty() ? 0 : layers.back().weight.rows(); }
    std::vector<Eigen::Index> layer_dims() const;
    Eigen::Index parameter_count() const;

    /// Throws std::invalid_argument if layer shapes do not chain from 1 to rank().
    void validate() const;
};

}  // namespace tnn
