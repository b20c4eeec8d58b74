#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tnn/cp_function.hpp"
#include "tnn/diffengine.hpp"
#include "tnn/log_scaled.hpp"
#include "tnn/network.hpp"
#include "tnn/problems.hpp"
#include "tnn/quadrature.hpp"

namespace tnn {

struct LossReport {
    double loss = 0.0;
    /// Rayleigh quotient for eigenproblems; NaN otherwise.
    double eigenvalue_estimate = 0.0;
    LogScaled numerator;
    LogScaled denominator;
};

/// One ParamGradient per subnetwork.
using ModelGradient = std::vector<ParamGradient>;

struct LossEvaluation {
    LossReport report;
    ModelGradient gradient;          // empty unless requested
    std::vector<DualBatch> batches;  // network outputs on the grids
};

/// Rayleigh quotient (int |grad Psi|^2 + int v Psi^2) / int Psi^2 and its gradient.
/// `potential` holds v sampled on `grids`, or null for v = 0.
LossEvaluation rayleigh_loss_and_grad(const TnnModel& model, std::span<const Grid1D> grids,
                                      const SampledCp* potential, bool want_gradient = true);

/// Ritz energy int (|grad Psi|^2 / 2 + c Psi^2 / 2 - f Psi) and its gradient.
LossEvaluation ritz_loss_and_grad(const TnnModel& model, std::span<const Grid1D> grids,
                                  const SampledCp& rhs, double reaction, bool want_gradient = true);

/// Problem data sampled once on fixed grids, with the matching loss.
class Objective {
public:
    Objective(Problem problem, std::vector<Grid1D> grids);

    const Problem& problem() const noexcept { return problem_; }
    const std::vector<Grid1D>& grids() const noexcept { return grids_; }
    /// Total quadrature nodes over all dimensions.
    std::int64_t node_count() const noexcept { return node_count_; }

    /// Throws std::invalid_argument when the model's shape, intervals or boundary
    /// decoration do not fit the problem.
    void check_compatible(const TnnModel& model) const;

    LossEvaluation evaluate(const TnnModel& model, bool want_gradient) const;

    struct Metrics {
        std::optional<double> e_lambda;
        std::optional<double> e_l2;
        std::optional<double> e_h1;
    };
    /// Error metrics for the network outputs `batches` (same grids as the loss).
    Metrics metrics(const LossReport& report, std::span<const DualBatch> batches) const;

private:
    Problem problem_;
    std::vector<Grid1D> grids_;
    std::optional<SampledCp> potential_;
    std::optional<SampledCp> rhs_;
    std::optional<SampledCp> exact_;
    std::int64_t node_count_ = 0;
};

// --- Optimizers ---------------------------------------------------------------

enum class OptimizerKind { gd, adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;
    std::vector<double> m;  // flat, in parameter order
    std::vector<double> v;
};

/// One update of a flat parameter vector.
void optimizer_update(OptimizerState& state, std::span<double> params, std::span<const double> grads);

/// One update of every model parameter. Parameter order: subnet, layer, weight
/// (column-major), bias. Throws NumericError naming the subnet and layer when a
/// gradient entry is not finite; the model is left untouched in that case.
void optimizer_step(OptimizerState& state, TnnModel& model, const ModelGradient& grads);

// --- Training loop --------------------------------------------------------------

struct LrSegment {
    std::int64_t epochs = 0;
    double rate = 0.0;
    friend bool operator==(const LrSegment&, const LrSegment&) = default;
};

struct TrainSchedule {
    std::int64_t epochs = 0;
    /// Piecewise-constant learning rate; segment epochs must sum to `epochs`.
    std::vector<LrSegment> segments;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::int64_t log_every = 100;

    double rate_at(std::int64_t epoch) const;
    void validate() const;
};

struct TrainPoint {
    std::int64_t epoch = 0;
    double loss = 0.0;
    std::optional<double> lambda_estimate;
    std::optional<double> e_lambda;
    std::optional<double> e_l2;
    std::optional<double> e_h1;
    double elapsed_seconds = 0.0;
};

struct TrainRecord {
    std::vector<TrainPoint> points;
    /// Minimum e_lambda over the logged points, when defined.
    std::optional<double> best_e_lambda;
    std::int64_t epochs_run = 0;
    bool stopped_early = false;
    /// Network evaluations counted in nodes; equals (evaluations) x Objective::node_count().
    std::int64_t nodes_evaluated = 0;

    const TrainPoint& final_point() const { return points.back(); }
};

struct TrainHooks {
    /// Called after each logged point; returning true ends training after that point.
    std::function<bool(const TrainPoint&)> stop;
};

/// Full-batch training on the objective's fixed grids. Logs at epoch 0, every
/// log_every epochs and after the last step. Loss and metrics of a point describe
/// the parameters before that epoch's update. Degenerate models raise
/// DegenerateModelError with the epoch index in the message.
TrainRecord train(TnnModel& model, const Objective& objective, const TrainSchedule& schedule,
                  const TrainHooks& hooks = {});

}  // namespace tnn
