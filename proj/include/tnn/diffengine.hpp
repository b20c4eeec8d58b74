#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tnn/subnetwork.hpp"

namespace tnn {

/// Subnetwork outputs and their input-derivatives at a batch of points (p x N each).
struct DualBatch {
    Eigen::MatrixXd values;
    Eigen::MatrixXd dvalues;

    Eigen::Index rank() const { return values.rows(); }
    Eigen::Index points() const { return values.cols(); }
};

struct LayerGradient {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
};

/// Gradient with respect to one subnetwork's parameters, congruent with its layers.
struct ParamGradient {
    std::vector<LayerGradient> layers;

    static ParamGradient zeros_like(const SubNetwork& net);

    ParamGradient& operator+=(const ParamGradient& other);
    ParamGradient& operator*=(double factor);
    double squared_norm() const;
    bool all_finite() const;
};

/// Intermediates of one forward pass, kept for the reverse sweep.
class ForwardTape {
public:
    const DualBatch& output() const noexcept { return output_; }
    const Eigen::VectorXd& inputs() const noexcept { return xs_; }
    /// Moves the output out; backward does not need it.
    DualBatch take_output() noexcept { return std::move(output_); }

private:
    friend ForwardTape record_forward(const SubNetwork&, const Eigen::VectorXd&);
    friend ParamGradient backward(const SubNetwork&, const ForwardTape&, const Eigen::MatrixXd&,
                                  const Eigen::MatrixXd&);

    struct Hidden {
        Eigen::ArrayXXd activated;  // sigma(z)
        Eigen::ArrayXXd slope;      // sigma'(z)
        Eigen::ArrayXXd dz;         // dz/dx
    };

    Eigen::VectorXd xs_;
    // Layer inputs stacked as [value | d/dx], each (fan_in x 2N).
    std::vector<Eigen::MatrixXd> layer_inputs_;
    std::vector<Hidden> hidden_;
    DualBatch output_;
};

/// Values and x-derivatives of the subnetwork, recording what backward needs.
ForwardTape record_forward(const SubNetwork& net, const Eigen::VectorXd& xs);

DualBatch forward_dual(const SubNetwork& net, const Eigen::VectorXd& xs);

/// Gradient of sum_{j,n} cot_values(j,n) phi_j(x_n) + cot_dvalues(j,n) phi_j'(x_n)
/// with respect to the subnetwork parameters.
ParamGradient backward(const SubNetwork& net, const ForwardTape& tape,
                       const Eigen::MatrixXd& cot_values, const Eigen::MatrixXd& cot_dvalues);

ParamGradient backward(const SubNetwork& net, const Eigen::VectorXd& xs,
                       const Eigen::MatrixXd& cot_values, const Eigen::MatrixXd& cot_dvalues);

}  // namespace tnn
