#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>

#include "test_support.hpp"
#include "tnn/errors.hpp"
#include "tnn/oracles.hpp"
#include "tnn/parallel.hpp"
#include "tnn/training.hpp"

using namespace tnn;
using tnn::test::kPi;
using tnn::test::rel_err;

namespace {

double gradient_norm(const ModelGradient& g) {
    double s = 0.0;
    for (const auto& p : g) s += p.squared_norm();
    return std::sqrt(s);
}

std::vector<double> flat_params(const TnnModel& m) {
    std::vector<double> out;
    for (int i = 0; i < m.dimension(); ++i) {
        for (const auto& l : m.subnet(i).layers) {
            out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
            out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
        }
    }
    return out;
}

Objective objective_for(const std::string& name, int d, int sub = 4, int pts = 4) {
    const Problem p = make_problem(name, d);
    return Objective(p, test::grids_for(p.domain, sub, pts));
}

TnnModel model_for(const Objective& obj, int p, std::uint64_t seed, int width = 4) {
    const Problem& pr = obj.problem();
    return oracle::random_model(pr.dimension(), p, 2, width, Activation::tanh, pr.boundary(), pr.domain, seed);
}

TrainSchedule adam(std::int64_t epochs, double lr, std::int64_t log_every = 100) {
    TrainSchedule s;
    s.epochs = epochs;
    if (epochs > 0) s.segments = {{epochs, lr}};
    s.log_every = log_every;
    return s;
}

}  // namespace

TEST_CASE("exact Laplace eigenfunction is a stationary point, d = 3") {
    // hidden units sin(k pi x), k = 1..3, all vanishing on the boundary; output picks k = 1.
    std::vector<SubNetwork> nets;
    Eigen::MatrixXd mix(1, 3);
    mix << 1.0, 0.0, 0.0;
    for (int i = 0; i < 3; ++i) nets.push_back(test::sine_net({0.0, 1.0}, {kPi, 2 * kPi, 3 * kPi}, {0.0, 0.0, 0.0}, mix));
    const TnnModel m(std::move(nets));
    const auto grids = test::grids_for(m.domain(), 10, 16);
    const LossEvaluation ev = rayleigh_loss_and_grad(m, grids, nullptr);
    CHECK(rel_err(ev.report.loss, 3 * kPi * kPi) <= 1e-8);
    CHECK(ev.report.eigenvalue_estimate == ev.report.loss);
    CHECK(ratio(ev.report.numerator, ev.report.denominator) == doctest::Approx(ev.report.loss).epsilon(1e-14));
    // output weights move Psi inside H^1_0, where Psi is a critical point
    for (const auto& g : ev.gradient) CHECK(g.layers.back().weight.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("loss gradients match finite differences") {
    for (const char* name : {"laplace", "harmonic", "coupled", "neumann"}) {
        for (int p : {1, 3}) {
            CAPTURE(name);
            CAPTURE(p);
            const Objective obj = objective_for(name, 2);
            const TnnModel m = model_for(obj, p, 77 + p);
            const ModelGradient g = obj.evaluate(m, true).gradient;
            const ModelGradient fd = oracle::finite_difference_gradient(
                m, [&](const TnnModel& x) { return obj.evaluate(x, false).report.loss; }, 1e-5);
            CHECK(oracle::compare_gradients(g, fd, 1e-6).max_relative_error <= 1e-5);
        }
    }
}

TEST_CASE("three-dimensional gradients match finite differences") {
    const Objective obj = objective_for("harmonic", 3, 3, 4);
    const TnnModel m = model_for(obj, 2, 5);
    const ModelGradient fd = oracle::finite_difference_gradient(
        m, [&](const TnnModel& x) { return obj.evaluate(x, false).report.loss; }, 1e-5);
    CHECK(oracle::compare_gradients(obj.evaluate(m, true).gradient, fd, 1e-6).max_relative_error <= 1e-5);
}

TEST_CASE("Rayleigh quotient is scale invariant") {
    const Objective obj = objective_for("harmonic", 3);
    TnnModel m = model_for(obj, 3, 8);
    const double before = obj.evaluate(m, false).report.loss;
    m.subnet(1).output_scale *= 3.0;
    CHECK(rel_err(obj.evaluate(m, false).report.loss, before) <= 1e-12);
}

TEST_CASE("losses match the full-grid oracle") {
    for (const char* name : {"laplace", "harmonic", "coupled"}) {
        const Objective obj = objective_for(name, 2);
        const TnnModel m = model_for(obj, 2, 3);
        const LossEvaluation ev = obj.evaluate(m, false);
        const CpFunction* v = obj.problem().potential ? &*obj.problem().potential : nullptr;
        CHECK(rel_err(ev.report.loss, oracle::rayleigh(ev.batches, obj.grids(), v)) <= 1e-12);
        CHECK(ev.gradient.empty());
    }
    const Objective obj = objective_for("neumann", 2);
    const TnnModel m = model_for(obj, 2, 3);
    const LossEvaluation ev = obj.evaluate(m, false);
    CHECK(std::isnan(ev.report.eigenvalue_estimate));
    CHECK(rel_err(ev.report.loss, oracle::ritz(ev.batches, obj.grids(), *obj.problem().rhs, kPi * kPi)) <= 1e-12);
}

TEST_CASE("Ritz energy at the exact Neumann solution") {
    const Problem p = make_neumann_bvp(2);
    const TnnModel m = test::cos_sum_model(2);
    const auto grids = test::grids_for(p.domain, 10, 16);
    const SampledCp f = sample_cp(*p.rhs, grids);
    const LossEvaluation ev = ritz_loss_and_grad(m, grids, f, kPi * kPi);
    // E(u) = -1/2 int f u = -pi^2 d / 2
    CHECK(rel_err(ev.report.loss, -kPi * kPi) <= 1e-10);
    CHECK(rel_err(ev.report.loss, oracle::ritz(ev.batches, grids, *p.rhs, kPi * kPi)) <= 1e-12);
    CHECK(gradient_norm(ev.gradient) <= 1e-7);
}

TEST_CASE("Ritz energy of the zero model with zero load") {
    const Problem p = make_neumann_bvp(2);
    TnnModel m = model_for(Objective(p, test::grids_for(p.domain, 2, 4)), 2, 1);
    m.subnet(0).layers.back().weight.setZero();
    m.subnet(0).layers.back().bias.setZero();
    const auto grids = test::grids_for(p.domain, 2, 4);
    const SampledCp zero = sample_cp(CpFunction(2), grids);
    const LossEvaluation ev = ritz_loss_and_grad(m, grids, zero, kPi * kPi);
    CHECK(ev.report.loss == 0.0);
    CHECK(gradient_norm(ev.gradient) == 0.0);
}

TEST_CASE("collapsed models raise a degenerate-model error") {
    const Objective obj = objective_for("laplace", 2);
    TnnModel m = model_for(obj, 2, 4);
    m.subnet(1).layers.back().weight.setZero();
    m.subnet(1).layers.back().bias.setZero();
    CHECK_THROWS_AS(obj.evaluate(m, true), DegenerateModelError);
    try {
        train(m, obj, adam(10, 1e-3));
        FAIL("expected an exception");
    } catch (const DegenerateModelError& e) {
        CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
    }
}

TEST_CASE("incompatible models are rejected") {
    const Objective obj = objective_for("laplace", 2);
    const Objective neu = objective_for("neumann", 2);
    const TnnModel m = model_for(obj, 2, 4);
    CHECK_NOTHROW(obj.check_compatible(m));
    CHECK_THROWS_AS(neu.check_compatible(m), std::invalid_argument);
    CHECK_THROWS_AS(objective_for("laplace", 3).check_compatible(m), std::invalid_argument);
    CHECK_THROWS_AS(objective_for("harmonic", 2).check_compatible(m), std::invalid_argument);
}

TEST_CASE("gradient descent steps") {
    OptimizerState gd;
    gd.kind = OptimizerKind::gd;
    gd.learning_rate = 0.1;
    std::vector<double> theta = {1.0, -2.0};
    const std::vector<double> zero = {0.0, 0.0};
    optimizer_update(gd, theta, zero);
    CHECK(theta == std::vector<double>{1.0, -2.0});
    std::vector<double> scalar = {1.0};
    const std::vector<double> grad = {scalar[0]};  // L = theta^2 / 2
    optimizer_update(gd, scalar, grad);
    CHECK(scalar[0] == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("Adam's first step has magnitude lr at any gradient scale") {
    for (double scale : {1e-6, 1.0, 1e6}) {
        OptimizerState s;
        s.learning_rate = 1e-3;
        std::vector<double> theta = {0.0, 0.0, 0.0};
        const std::vector<double> g = {scale, -scale, scale};
        optimizer_update(s, theta, g);
        for (int k = 0; k < 3; ++k) CHECK(std::abs(theta[k]) == doctest::Approx(1e-3).epsilon(1e-4));
        CHECK(theta[1] > 0.0);
        CHECK(s.step == 1);
    }
    CHECK(parse_optimizer("gd") == OptimizerKind::gd);
    CHECK(to_string(parse_optimizer("adam")) == "adam");
    CHECK_THROWS(parse_optimizer("lbfgs"));
}

TEST_CASE("optimizer_step walks parameters in documented order and rejects non-finite gradients") {
    const Objective obj = objective_for("laplace", 2);
    TnnModel m = model_for(obj, 2, 6);
    const std::vector<double> before = flat_params(m);
    const double bias_before = m.subnet(1).layers[0].bias(0);
    ModelGradient g;
    for (int i = 0; i < 2; ++i) g.push_back(ParamGradient::zeros_like(m.subnet(i)));
    g[1].layers[0].bias(0) = 1.0;

    OptimizerState gd;
    gd.kind = OptimizerKind::gd;
    gd.learning_rate = 0.5;
    optimizer_step(gd, m, g);
    const std::vector<double> after = flat_params(m);
    std::size_t changed = 0;
    for (std::size_t k = 0; k < before.size(); ++k)
        if (after[k] != before[k]) ++changed;
    CHECK(changed == 1);
    CHECK(m.subnet(1).layers[0].bias(0) == bias_before - 0.5);

    g[1].layers[0].bias(0) = 0.0;
    g[1].layers[1].weight(0, 0) = std::numeric_limits<double>::quiet_NaN();
    const std::vector<double> snapshot = flat_params(m);
    try {
        optimizer_step(gd, m, g);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("subnet 1") != std::string::npos);
        CHECK(msg.find("layer 1") != std::string::npos);
    }
    CHECK(flat_params(m) == snapshot);
}

TEST_CASE("schedules") {
    TrainSchedule s;
    s.epochs = 30;
    s.segments = {{10, 1e-2}, {20, 1e-3}};
    CHECK_NOTHROW(s.validate());
    CHECK(s.rate_at(0) == 1e-2);
    CHECK(s.rate_at(9) == 1e-2);
    CHECK(s.rate_at(10) == 1e-3);
    CHECK(s.rate_at(29) == 1e-3);
    s.epochs = 31;
    CHECK_THROWS(s.validate());
    s.epochs = 30;
    s.segments[0].rate = -1.0;
    CHECK_THROWS(s.validate());
    s.segments[0].rate = 1e-2;
    s.log_every = 0;
    CHECK_THROWS(s.validate());
}

TEST_CASE("zero epochs record only the initial evaluation") {
    const Objective obj = objective_for("laplace", 2);
    TnnModel m = model_for(obj, 2, 1);
    const std::vector<double> before = flat_params(m);
    const TrainRecord r = train(m, obj, adam(0, 1e-3));
    REQUIRE(r.points.size() == 1);
    CHECK(r.points[0].epoch == 0);
    CHECK(r.epochs_run == 0);
    CHECK(r.best_e_lambda == r.points[0].e_lambda);
    CHECK(flat_params(m) == before);
    CHECK(r.nodes_evaluated == obj.node_count());
}

TEST_CASE("training touches only the fixed grid") {
    const Objective obj = objective_for("harmonic", 2);
    const std::vector<Grid1D> grids_before = obj.grids();
    TnnModel m = model_for(obj, 2, 2);
    const TrainRecord r = train(m, obj, adam(25, 1e-3, 10));
    // 25 gradient evaluations, plus the final gradient-free one
    CHECK(r.nodes_evaluated == 26 * obj.node_count());
    CHECK(obj.node_count() == 2 * 16);
    for (std::size_t i = 0; i < grids_before.size(); ++i) {
        CHECK(obj.grids()[i].nodes() == grids_before[i].nodes());
        CHECK(obj.grids()[i].weights() == grids_before[i].weights());
    }
    std::vector<std::int64_t> epochs;
    for (const auto& p : r.points) epochs.push_back(p.epoch);
    CHECK(epochs == std::vector<std::int64_t>{0, 10, 20, 25});
}

TEST_CASE("training is deterministic, including across thread counts") {
    const Objective obj = objective_for("coupled", 3);
    auto run = [&](int threads) {
        set_thread_count(threads);
        TnnModel m = model_for(obj, 3, 9);
        TrainRecord r = train(m, obj, adam(40, 3e-3, 10));
        set_thread_count(1);
        return std::make_pair(r, flat_params(m));
    };
    const auto a = run(1), b = run(1), c = run(3);
    for (const auto* other : {&b, &c}) {
        REQUIRE(other->first.points.size() == a.first.points.size());
        for (std::size_t k = 0; k < a.first.points.size(); ++k) {
            CHECK(other->first.points[k].loss == a.first.points[k].loss);
            CHECK(other->first.points[k].e_lambda == a.first.points[k].e_lambda);
        }
        CHECK(other->second == a.second);
    }
}

TEST_CASE("stop hook ends training after a logged point") {
    const Objective obj = objective_for("laplace", 2);
    TnnModel m = model_for(obj, 2, 1);
    TrainHooks hooks;
    hooks.stop = [](const TrainPoint& p) { return p.epoch >= 20; };
    const TrainRecord r = train(m, obj, adam(100, 1e-3, 10), hooks);
    CHECK(r.stopped_early);
    CHECK(r.epochs_run == 20);
    CHECK(r.final_point().epoch == 20);
}

TEST_CASE("Laplace d = 1 converges and respects the variational lower bound") {
    ModelOptions opt;
    opt.dimension = 1;
    opt.rank = 5;
    opt.width = 10;
    const Objective obj = objective_for("laplace", 1, 10, 16);
    TnnModel m = init_model(opt, obj.problem().domain, 1);
    const TrainRecord r = train(m, obj, adam(5000, 3e-3, 500));
    REQUIRE(r.best_e_lambda.has_value());
    CHECK(*r.best_e_lambda <= 1e-6);
    const double lambda = obj.problem().exact_eigenvalue.value();
    for (const auto& p : r.points) CHECK(*p.lambda_estimate >= lambda * (1 - 1e-8));
    CHECK(r.final_point().e_l2.has_value());
    CHECK(r.final_point().e_h1.has_value());
}
