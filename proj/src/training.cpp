#include "tnn/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tnn/errors.hpp"
#include "tnn/integrals.hpp"
#include "tnn/parallel.hpp"
#include "tnn/separated.hpp"

namespace tnn {
namespace {

constexpr double kDegenerateRatio = 1e-12;

void check_inputs(const TnnModel& model, std::span<const Grid1D> grids) {
    if (model.dimension() == 0 || static_cast<int>(grids.size()) != model.dimension()) {
        throw std::invalid_argument("loss: need one grid per model dimension");
    }
}

// Runs the networks on the grids. Tapes are kept only when a gradient is wanted.
std::vector<ForwardTape> run_forward(const TnnModel& model, std::span<const Grid1D> grids,
                                     bool want_gradient, std::vector<DualBatch>& batches) {
    std::vector<ForwardTape> tapes;
    if (want_gradient) {
        tapes = record_grid(model, grids);
        batches.clear();
        batches.reserve(tapes.size());
        for (auto& tape : tapes) batches.push_back(tape.take_output());
    } else {
        batches = evaluate_grid(model, grids);
    }
    return tapes;
}

// Psi collapsed: its norm is negligible against the norms of its rank-one terms.
void check_degenerate(const GramSet& grams, const LogScaled& denominator) {
    if (denominator.is_zero()) throw DegenerateModelError("trial function vanished (int Psi^2 = 0)");
    ScaledMatrix diag = ScaledMatrix::from(grams.mass[0].diagonal());
    for (int i = 1; i < grams.dimension(); ++i) {
        diag = hadamard(diag, Eigen::MatrixXd(grams.mass[static_cast<std::size_t>(i)].diagonal()));
    }
    const LogScaled terms = diag.sum();
    if (terms.is_zero() || ratio(denominator, terms) < kDegenerateRatio) {
        throw DegenerateModelError("trial function collapsed: int Psi^2 is below " +
                                   std::to_string(kDegenerateRatio) + " of its rank-one terms");
    }
}

Eigen::MatrixXd symmetric_sum(const Eigen::MatrixXd& c) { return c + c.transpose(); }

// Adds (C + C^T) * phi * diag(weights) to `out`.
void add_gram_pullback(Eigen::MatrixXd& out, const Eigen::MatrixXd& cot, const Eigen::MatrixXd& phi,
                       const Eigen::VectorXd& weights) {
    Eigen::MatrixXd t = symmetric_sum(cot) * phi;
    t.array().rowwise() *= weights.transpose().array();
    out += t;
}

}  // namespace

// --- Losses -------------------------------------------------------------------

LossEvaluation rayleigh_loss_and_grad(const TnnModel& model, std::span<const Grid1D> grids,
                                      const SampledCp* potential, bool want_gradient) {
    check_inputs(model, grids);
    const int d = model.dimension();
    LossEvaluation out;
    std::vector<ForwardTape> tapes = run_forward(model, grids, want_gradient, out.batches);
    const GramSet grams = assemble_grams(out.batches, grids, potential);

    std::vector<SeparatedTerm> num_terms = grad2_terms(grams);
    for (auto& t : weighted_terms(grams)) num_terms.push_back(std::move(t));
    const std::vector<SeparatedTerm> plain(1);
    const SeparatedSum num = separated_sum(grams.mass, num_terms, want_gradient);
    const SeparatedSum den = separated_sum(grams.mass, plain, want_gradient);
    check_degenerate(grams, den.value);

    const double lambda = ratio(num.value, den.value);
    if (!std::isfinite(lambda)) throw NumericError("Rayleigh quotient is not finite");
    const double total = grams.total_log_scale();
    out.report = {lambda, lambda, num.value.scaled_log(total), den.value.scaled_log(total)};
    if (!want_gradient) return out;

    // Where each dimension appears among the weighted terms: (term, factor, potential term).
    struct WeightedSlot {
        std::size_t term;
        std::size_t factor;
        int potential_term;
    };
    std::vector<std::vector<WeightedSlot>> slots(static_cast<std::size_t>(d));
    for (int t = 0; t < grams.potential_rank; ++t) {
        const std::size_t term = static_cast<std::size_t>(d + t);
        const auto& factors = num_terms[term].factors;
        for (std::size_t f = 0; f < factors.size(); ++f) {
            slots[static_cast<std::size_t>(factors[f].first)].push_back({term, f, t});
        }
    }

    // d lambda / d G_i = (dN~/dG~_i - lambda dD~/dG~_i) / (c_i D~) for each true Gram G_i.
    const LogScaled dnorm = den.value.normalized();
    const double den_log = dnorm.log_scale;
    const double den_mantissa = dnorm.mantissa;

    out.gradient.resize(static_cast<std::size_t>(d));
    for_each_index(d, [&](int i) {
        const auto ui = static_cast<std::size_t>(i);
        const double inv = 1.0 / (den_mantissa * std::exp(grams.log_scale[ui]));
        const Eigen::MatrixXd& phi = out.batches[ui].values;
        const Eigen::VectorXd& w = grids[ui].weights();

        const Eigen::MatrixXd cot_mass = inv * (num.base_cotangents[ui].value(-den_log) -
                                                lambda * den.base_cotangents[ui].value(-den_log));
        const Eigen::MatrixXd cot_stiff = inv * num.factor_cotangents[ui][0].value(-den_log);

        Eigen::MatrixXd cot_values = Eigen::MatrixXd::Zero(phi.rows(), phi.cols());
        Eigen::MatrixXd cot_dvalues = Eigen::MatrixXd::Zero(phi.rows(), phi.cols());
        add_gram_pullback(cot_values, cot_mass, phi, w);
        add_gram_pullback(cot_dvalues, cot_stiff, out.batches[ui].dvalues, w);
        for (const WeightedSlot& s : slots[ui]) {
            const Eigen::MatrixXd cot_w = inv * num.factor_cotangents[s.term][s.factor].value(-den_log);
            const auto& g = potential->values[static_cast<std::size_t>(s.potential_term)][ui];
            add_gram_pullback(cot_values, cot_w, phi, w.cwiseProduct(*g));
        }
        out.gradient[ui] = backward(model.subnet(i), tapes[ui], cot_values, cot_dvalues);
    });
    return out;
}

LossEvaluation ritz_loss_and_grad(const TnnModel& model, std::span<const Grid1D> grids,
                                  const SampledCp& rhs, double reaction, bool want_gradient) {
    check_inputs(model, grids);
    const int d = model.dimension();
    if (rhs.dimension != d) throw std::invalid_argument("ritz loss: right-hand side dimension mismatch");
    LossEvaluation out;
    std::vector<ForwardTape> tapes = run_forward(model, grids, want_gradient, out.batches);
    const GramSet grams = assemble_grams(out.batches, grids);

    const std::vector<SeparatedTerm> plain(1);
    const SeparatedSum kin = separated_sum(grams.mass, grad2_terms(grams), want_gradient);
    const SeparatedSum mass = separated_sum(grams.mass, plain, want_gradient);

    // int f Psi = sum_l sum_j prod_i b_{i,l}[j], with b = Phi (w .* f_{i,l}) or Phi w.
    std::vector<Eigen::MatrixXd> means(static_cast<std::size_t>(d));
    std::vector<SeparatedTerm> rhs_terms(static_cast<std::size_t>(rhs.rank()));
    for (int i = 0; i < d; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        means[ui] = out.batches[ui].values * grids[ui].weights();
        for (int l = 0; l < rhs.rank(); ++l) {
            const auto& g = rhs.values[static_cast<std::size_t>(l)][ui];
            if (g) rhs_terms[static_cast<std::size_t>(l)].factors.emplace_back(
                i, cross_vector(out.batches[ui], grids[ui], *g, false));
        }
    }
    const SeparatedSum load = separated_sum(means, rhs_terms, want_gradient);

    const double total = grams.total_log_scale();
    const LogScaled k = kin.value.scaled_log(total);
    const LogScaled m = mass.value.scaled_log(total);
    const LogScaled energy = 0.5 * k + (0.5 * reaction) * m - load.value;
    out.report = {energy.value(), std::numeric_limits<double>::quiet_NaN(), k, m};
    if (!std::isfinite(out.report.loss)) throw NumericError("Ritz energy is not finite");
    if (!want_gradient) return out;

    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> slots(static_cast<std::size_t>(d));
    for (std::size_t l = 0; l < rhs_terms.size(); ++l) {
        const auto& factors = rhs_terms[l].factors;
        for (std::size_t f = 0; f < factors.size(); ++f) {
            slots[static_cast<std::size_t>(factors[f].first)].emplace_back(l, f);
        }
    }

    out.gradient.resize(static_cast<std::size_t>(d));
    for_each_index(d, [&](int i) {
        const auto ui = static_cast<std::size_t>(i);
        const double extra = total - grams.log_scale[ui];
        const Eigen::MatrixXd& phi = out.batches[ui].values;
        const Eigen::VectorXd& w = grids[ui].weights();

        const Eigen::MatrixXd cot_mass = 0.5 * kin.base_cotangents[ui].value(extra) +
                                         (0.5 * reaction) * mass.base_cotangents[ui].value(extra);
        const Eigen::MatrixXd cot_stiff = 0.5 * kin.factor_cotangents[ui][0].value(extra);

        Eigen::MatrixXd cot_values = Eigen::MatrixXd::Zero(phi.rows(), phi.cols());
        Eigen::MatrixXd cot_dvalues = Eigen::MatrixXd::Zero(phi.rows(), phi.cols());
        add_gram_pullback(cot_values, cot_mass, phi, w);
        add_gram_pullback(cot_dvalues, cot_stiff, out.batches[ui].dvalues, w);

        // The load term enters with a minus sign; its vectors are linear in Phi.
        cot_values -= load.base_cotangents[ui].value() * w.transpose();
        for (const auto& [l, f] : slots[ui]) {
            const auto& g = rhs.values[l][ui];
            cot_values -= load.factor_cotangents[l][f].value() * w.cwiseProduct(*g).transpose();
        }
        out.gradient[ui] = backward(model.subnet(i), tapes[ui], cot_values, cot_dvalues);
    });
    return out;
}

// --- Objective ----------------------------------------------------------------

Objective::Objective(Problem problem, std::vector<Grid1D> grids)
    : problem_(std::move(problem)), grids_(std::move(grids)) {
    if (static_cast<int>(grids_.size()) != problem_.dimension()) {
        throw std::invalid_argument("objective: need one grid per problem dimension");
    }
    for (std::size_t i = 0; i < grids_.size(); ++i) {
        if (!(grids_[i].interval() == problem_.domain[i])) {
            throw std::invalid_argument("objective: grid " + std::to_string(i) +
                                        " does not cover the problem interval");
        }
        node_count_ += grids_[i].size();
    }
    if (problem_.potential) potential_ = sample_cp(*problem_.potential, grids_);
    if (problem_.rhs) rhs_ = sample_cp(*problem_.rhs, grids_);
    if (problem_.exact_solution) exact_ = sample_cp(*problem_.exact_solution, grids_);
    if (!problem_.is_eigen() && (!rhs_ || !problem_.reaction)) {
        throw std::invalid_argument("objective: boundary value problem needs a rhs and a reaction");
    }
}

void Objective::check_compatible(const TnnModel& model) const {
    if (model.dimension() != problem_.dimension()) {
        throw std::invalid_argument("model dimension " + std::to_string(model.dimension()) +
                                    " does not match problem dimension " +
                                    std::to_string(problem_.dimension()));
    }
    for (int i = 0; i < model.dimension(); ++i) {
        const SubNetwork& net = model.subnet(i);
        if (!(net.interval == problem_.domain[static_cast<std::size_t>(i)])) {
            throw std::invalid_argument("subnet " + std::to_string(i) + " interval differs from the domain");
        }
        if (net.boundary != problem_.boundary()) {
            throw std::invalid_argument("subnet " + std::to_string(i) + " boundary decoration '" +
                                        std::string(to_string(net.boundary)) + "' does not suit problem " +
                                        problem_.name);
        }
    }
}

LossEvaluation Objective::evaluate(const TnnModel& model, bool want_gradient) const {
    if (problem_.is_eigen()) {
        return rayleigh_loss_and_grad(model, grids_, potential_ ? &*potential_ : nullptr, want_gradient);
    }
    return ritz_loss_and_grad(model, grids_, *rhs_, *problem_.reaction, want_gradient);
}

Objective::Metrics Objective::metrics(const LossReport& report, std::span<const DualBatch> batches) const {
    Metrics m;
    if (problem_.is_eigen()) {
        if (problem_.exact_eigenvalue) {
            m.e_lambda = error_lambda(report.eigenvalue_estimate, *problem_.exact_eigenvalue);
        }
        if (exact_) {
            m.e_l2 = error_l2_projection(batches, grids_, *exact_);
            m.e_h1 = error_h1_projection(batches, grids_, *exact_);
        }
    } else if (exact_) {
        const BvpErrors e = error_bvp(batches, grids_, *exact_, *rhs_);
        m.e_l2 = e.l2;
        m.e_h1 = e.h1;
    }
    return m;
}

// --- Optimizers ---------------------------------------------------------------

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::gd ? "gd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
    if (name == "gd") return OptimizerKind::gd;
    if (name == "adam") return OptimizerKind::adam;
    throw std::invalid_argument("unknown optimizer '" + std::string(name) + "' (expected gd or adam)");
}

namespace {

// Updates params[0..n) whose moments live at state.m[offset..]; state.step already advanced.
void apply_block(OptimizerState& state, std::size_t offset, double* params, const double* grads,
                 std::size_t n) {
    const double lr = state.learning_rate;
    if (state.kind == OptimizerKind::gd) {
        for (std::size_t k = 0; k < n; ++k) params[k] -= lr * grads[k];
        return;
    }
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    double* m = state.m.data() + offset;
    double* v = state.v.data() + offset;
    for (std::size_t k = 0; k < n; ++k) {
        const double g = grads[k];
        m[k] = b1 * m[k] + (1.0 - b1) * g;
        v[k] = b2 * v[k] + (1.0 - b2) * g * g;
        params[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + state.epsilon);
    }
}

void ensure_moments(OptimizerState& state, std::size_t size) {
    if (state.kind != OptimizerKind::adam) return;
    if (state.m.empty() && state.v.empty()) {
        state.m.assign(size, 0.0);
        state.v.assign(size, 0.0);
    } else if (state.m.size() != size || state.v.size() != size) {
        throw std::invalid_argument("optimizer state does not match the parameter count");
    }
}

}  // namespace

void optimizer_update(OptimizerState& state, std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("optimizer_update: size mismatch");
    for (std::size_t k = 0; k < grads.size(); ++k) {
        if (!std::isfinite(grads[k])) {
            throw NumericError("non-finite gradient at parameter " + std::to_string(k));
        }
    }
    ensure_moments(state, params.size());
    ++state.step;
    apply_block(state, 0, params.data(), grads.data(), params.size());
}

void optimizer_step(OptimizerState& state, TnnModel& model, const ModelGradient& grads) {
    if (static_cast<int>(grads.size()) != model.dimension()) {
        throw std::invalid_argument("optimizer_step: one gradient per subnet required");
    }
    for (int i = 0; i < model.dimension(); ++i) {
        const SubNetwork& net = model.subnet(i);
        const ParamGradient& g = grads[static_cast<std::size_t>(i)];
        if (g.layers.size() != net.layers.size()) {
            throw std::invalid_argument("optimizer_step: gradient of subnet " + std::to_string(i) +
                                        " has the wrong layer count");
        }
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            const auto& gl = g.layers[l];
            if (gl.weight.rows() != net.layers[l].weight.rows() ||
                gl.weight.cols() != net.layers[l].weight.cols() ||
                gl.bias.size() != net.layers[l].bias.size()) {
                throw std::invalid_argument("optimizer_step: gradient shape mismatch in subnet " +
                                            std::to_string(i) + " layer " + std::to_string(l));
            }
            if (!gl.weight.allFinite() || !gl.bias.allFinite()) {
                throw NumericError("non-finite gradient in subnet " + std::to_string(i) + " layer " +
                                   std::to_string(l));
            }
        }
    }
    ensure_moments(state, static_cast<std::size_t>(model.parameter_count()));
    ++state.step;
    std::size_t offset = 0;
    for (int i = 0; i < model.dimension(); ++i) {
        SubNetwork& net = model.subnet(i);
        const ParamGradient& g = grads[static_cast<std::size_t>(i)];
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            DenseLayer& layer = net.layers[l];
            const auto nw = static_cast<std::size_t>(layer.weight.size());
            const auto nb = static_cast<std::size_t>(layer.bias.size());
            apply_block(state, offset, layer.weight.data(), g.layers[l].weight.data(), nw);
            offset += nw;
            apply_block(state, offset, layer.bias.data(), g.layers[l].bias.data(), nb);
            offset += nb;
        }
    }
}

// --- Training loop --------------------------------------------------------------

double TrainSchedule::rate_at(std::int64_t epoch) const {
    if (segments.empty()) throw std::logic_error("schedule has no learning-rate segments");
    std::int64_t end = 0;
    for (const LrSegment& s : segments) {
        end += s.epochs;
        if (epoch < end) return s.rate;
    }
    return segments.back().rate;
}

void TrainSchedule::validate() const {
    if (epochs < 0) throw std::invalid_argument("schedule: epochs must be non-negative");
    if (log_every < 1) throw std::invalid_argument("schedule: log_every must be positive");
    std::int64_t sum = 0;
    for (const LrSegment& s : segments) {
        if (s.epochs < 1) throw std::invalid_argument("schedule: segment epochs must be positive");
        if (!(s.rate > 0.0) || !std::isfinite(s.rate)) {
            throw std::invalid_argument("schedule: learning rates must be positive");
        }
        sum += s.epochs;
    }
    if (sum != epochs) {
        throw std::invalid_argument("schedule: segment epochs sum to " + std::to_string(sum) +
                                    " but epochs is " + std::to_string(epochs));
    }
}

TrainRecord train(TnnModel& model, const Objective& objective, const TrainSchedule& schedule,
                  const TrainHooks& hooks) {
    schedule.validate();
    objective.check_compatible(model);

    OptimizerState state;
    state.kind = schedule.optimizer;
    TrainRecord record;
    const auto start = std::chrono::steady_clock::now();

    for (std::int64_t k = 0;; ++k) {
        const bool last = k == schedule.epochs;
        const bool log = last || k % schedule.log_every == 0;
        LossEvaluation eval;
        TrainPoint point;
        try {
            eval = objective.evaluate(model, !last);
            record.nodes_evaluated += objective.node_count();
            if (log) {
                const Objective::Metrics m = objective.metrics(eval.report, eval.batches);
                point.epoch = k;
                point.loss = eval.report.loss;
                if (objective.problem().is_eigen()) point.lambda_estimate = eval.report.eigenvalue_estimate;
                point.e_lambda = m.e_lambda;
                point.e_l2 = m.e_l2;
                point.e_h1 = m.e_h1;
            }
        } catch (const DegenerateModelError& e) {
            throw DegenerateModelError("epoch " + std::to_string(k) + ": " + e.what());
        } catch (const NumericError& e) {
            throw NumericError("epoch " + std::to_string(k) + ": " + e.what());
        }

        if (log) {
            point.elapsed_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (point.e_lambda && (!record.best_e_lambda || *point.e_lambda < *record.best_e_lambda)) {
                record.best_e_lambda = point.e_lambda;
            }
            record.points.push_back(point);
            if (!last && hooks.stop && hooks.stop(point)) {
                record.stopped_early = true;
                record.epochs_run = k;
                break;
            }
        }
        if (last) {
            record.epochs_run = k;
            break;
        }
        state.learning_rate = schedule.rate_at(k);
        try {
            optimizer_step(state, model, eval.gradient);
        } catch (const NumericError& e) {
            throw NumericError("epoch " + std::to_string(k) + ": " + e.what());
        }
    }
    return record;
}

}  // namespace tnn
