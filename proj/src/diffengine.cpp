#include "tnn/diffengine.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tnn/errors.hpp"

namespace tnn {
namespace {

void check_parameters_finite(const SubNetwork& net) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        if (!net.layers[l].weight.allFinite()) {
            throw NumericError("non-finite weight in layer " + std::to_string(l));
        }
        if (!net.layers[l].bias.allFinite()) {
            throw NumericError("non-finite bias in layer " + std::to_string(l));
        }
    }
    if (!std::isfinite(net.output_scale)) throw NumericError("non-finite output scale");
}

void check_inputs_finite(const Eigen::VectorXd& xs) {
    for (Eigen::Index n = 0; n < xs.size(); ++n) {
        if (!std::isfinite(xs(n))) {
            throw NumericError("non-finite input at position " + std::to_string(n));
        }
    }
}

// sigma(z) and sigma'(z). tanh goes through exp so the bulk of the work vectorizes.
void activate(Activation kind, const Eigen::ArrayXXd& z, Eigen::ArrayXXd& value,
              Eigen::ArrayXXd& slope) {
    switch (kind) {
        case Activation::tanh:
            value = 1.0 - 2.0 / ((2.0 * z).exp() + 1.0);
            slope = 1.0 - value.square();
            return;
        case Activation::sine:
            value = z.sin();
            slope = z.cos();
            return;
    }
}

Eigen::ArrayXXd second_derivative(Activation kind, const Eigen::ArrayXXd& value,
                                  const Eigen::ArrayXXd& slope) {
    if (kind == Activation::tanh) return -2.0 * value * slope;
    return -value;
}

}  // namespace

ParamGradient ParamGradient::zeros_like(const SubNetwork& net) {
    ParamGradient g;
    g.layers.reserve(net.layers.size());
    for (const auto& layer : net.layers) {
        g.layers.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                            Eigen::VectorXd::Zero(layer.bias.size())});
    }
    return g;
}

ParamGradient& ParamGradient::operator+=(const ParamGradient& other) {
    if (other.layers.size() != layers.size()) {
        throw std::invalid_argument("ParamGradient: layer count mismatch");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weight += other.layers[l].weight;
        layers[l].bias += other.layers[l].bias;
    }
    return *this;
}

ParamGradient& ParamGradient::operator*=(double factor) {
    for (auto& layer : layers) {
        layer.weight *= factor;
        layer.bias *= factor;
    }
    return *this;
}

double ParamGradient::squared_norm() const {
    double s = 0.0;
    for (const auto& layer : layers) s += layer.weight.squaredNorm() + layer.bias.squaredNorm();
    return s;
}

bool ParamGradient::all_finite() const {
    for (const auto& layer : layers) {
        if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
    }
    return true;
}

ForwardTape record_forward(const SubNetwork& net, const Eigen::VectorXd& xs) {
    net.validate();
    check_parameters_finite(net);
    check_inputs_finite(xs);

    const Eigen::Index n = xs.size();
    const std::size_t depth = net.layers.size();

    ForwardTape tape;
    tape.xs_ = xs;
    tape.layer_inputs_.reserve(depth);
    tape.hidden_.reserve(depth - 1);

    Eigen::MatrixXd stacked(1, 2 * n);
    stacked.leftCols(n) = xs.transpose();
    stacked.rightCols(n).setOnes();

    Eigen::MatrixXd out;
    for (std::size_t l = 0; l < depth; ++l) {
        const DenseLayer& layer = net.layers[l];
        out.noalias() = layer.weight * stacked;
        out.leftCols(n).colwise() += layer.bias;
        tape.layer_inputs_.push_back(std::move(stacked));
        if (l + 1 == depth) break;

        ForwardTape::Hidden h;
        activate(net.activation, out.leftCols(n).array(), h.activated, h.slope);
        h.dz = out.rightCols(n).array();
        stacked.resize(out.rows(), 2 * n);
        stacked.leftCols(n) = h.activated.matrix();
        stacked.rightCols(n) = (h.slope * h.dz).matrix();
        tape.hidden_.push_back(std::move(h));
    }

    const double scale = net.output_scale;
    DualBatch& result = tape.output_;
    if (net.boundary == Boundary::dirichlet) {
        const double a = net.interval.lo;
        const double b = net.interval.hi;
        const Eigen::RowVectorXd beta = ((xs.array() - a) * (b - xs.array())).matrix().transpose();
        const Eigen::RowVectorXd dbeta = ((a + b) - 2.0 * xs.array()).matrix().transpose();
        result.values = scale * (out.leftCols(n).array().rowwise() * beta.array()).matrix();
        result.dvalues = scale * ((out.leftCols(n).array().rowwise() * dbeta.array()) +
                                  (out.rightCols(n).array().rowwise() * beta.array()))
                                     .matrix();
    } else {
        result.values = scale * out.leftCols(n);
        result.dvalues = scale * out.rightCols(n);
    }
    return tape;
}

DualBatch forward_dual(const SubNetwork& net, const Eigen::VectorXd& xs) {
    return record_forward(net, xs).output();
}

ParamGradient backward(const SubNetwork& net, const ForwardTape& tape,
                       const Eigen::MatrixXd& cot_values, const Eigen::MatrixXd& cot_dvalues) {
    const Eigen::Index n = tape.xs_.size();
    const Eigen::Index p = net.rank();
    if (cot_values.rows() != p || cot_values.cols() != n || cot_dvalues.rows() != p ||
        cot_dvalues.cols() != n) {
        throw std::invalid_argument("backward: cotangent shape does not match (rank x points)");
    }
    if (tape.layer_inputs_.size() != net.layers.size()) {
        throw std::invalid_argument("backward: tape was recorded for a different network");
    }

    // Undo the output decoration: cotangents on the last affine layer's (v, dv).
    const double scale = net.output_scale;
    Eigen::MatrixXd cot(p, 2 * n);
    if (net.boundary == Boundary::dirichlet) {
        const double a = net.interval.lo;
        const double b = net.interval.hi;
        const Eigen::ArrayXd x = tape.xs_.array();
        const Eigen::RowVectorXd beta = ((x - a) * (b - x)).matrix().transpose();
        const Eigen::RowVectorXd dbeta = ((a + b) - 2.0 * x).matrix().transpose();
        cot.leftCols(n) = scale * ((cot_values.array().rowwise() * beta.array()) +
                                   (cot_dvalues.array().rowwise() * dbeta.array()))
                                      .matrix();
        cot.rightCols(n) = scale * (cot_dvalues.array().rowwise() * beta.array()).matrix();
    } else {
        cot.leftCols(n) = scale * cot_values;
        cot.rightCols(n) = scale * cot_dvalues;
    }

    ParamGradient grad;
    grad.layers.resize(net.layers.size());
    Eigen::MatrixXd cot_in;
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const DenseLayer& layer = net.layers[l];
        grad.layers[l].weight.noalias() = cot * tape.layer_inputs_[l].transpose();
        grad.layers[l].bias = cot.leftCols(n).rowwise().sum();
        if (l == 0) break;

        cot_in.noalias() = layer.weight.transpose() * cot;
        const ForwardTape::Hidden& h = tape.hidden_[l - 1];
        const Eigen::ArrayXXd curvature = second_derivative(net.activation, h.activated, h.slope);
        cot.resize(cot_in.rows(), 2 * n);
        cot.leftCols(n) = (cot_in.leftCols(n).array() * h.slope +
                           cot_in.rightCols(n).array() * curvature * h.dz)
                              .matrix();
        cot.rightCols(n) = (cot_in.rightCols(n).array() * h.slope).matrix();
    }
    return grad;
}

ParamGradient backward(const SubNetwork& net, const Eigen::VectorXd& xs,
                       const Eigen::MatrixXd& cot_values, const Eigen::MatrixXd& cot_dvalues) {
    return backward(net, record_forward(net, xs), cot_values, cot_dvalues);
}

}  // namespace tnn
