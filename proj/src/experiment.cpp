#include "tnn/experiment.hpp"

#include <Eigen/Core>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tnn/errors.hpp"
#include "tnn/network.hpp"
#include "tnn/parallel.hpp"

namespace tnn {
namespace {

constexpr const char* kVersion = "1.0.0";

std::string field(const std::optional<double>& x) {
    if (!x) return {};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *x);
    return buf;
}

nlohmann::json json_or_null(const std::optional<double>& x) {
    return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

nlohmann::json point_json(const TrainPoint& p) {
    return {{"epoch", p.epoch},
            {"loss", p.loss},
            {"lambda_estimate", json_or_null(p.lambda_estimate)},
            {"e_lambda", json_or_null(p.e_lambda)},
            {"e_l2", json_or_null(p.e_l2)},
            {"e_h1", json_or_null(p.e_h1)},
            {"elapsed_seconds", p.elapsed_seconds}};
}

nlohmann::json config_json(const RunConfig& c) {
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& s : c.lr_segments) segments.push_back({{"epochs", s.epochs}, {"rate", s.rate}});
    return {{"problem", c.problem},
            {"dimension", c.dimension},
            {"rank", c.rank},
            {"depth", c.depth},
            {"width", c.width},
            {"activation", std::string(to_string(c.activation))},
            {"subintervals", c.subintervals},
            {"points_per_subinterval", c.points_per_subinterval},
            {"optimizer", std::string(to_string(c.optimizer))},
            {"lr_segments", segments},
            {"epochs", c.epochs},
            {"log_every", c.log_every},
            {"seed", c.seed},
            {"output_dir", c.output_dir},
            {"truncation", c.truncation}};
}

nlohmann::json versions_json() {
    return {{"tnn", kVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                          "." + std::to_string(EIGEN_MINOR_VERSION)},
            {"compiler", __VERSION__},
            {"cxx_standard", static_cast<long>(__cplusplus)}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_summary(const std::filesystem::path& dir, const RunConfig& config, const std::string& status,
                   const std::optional<TrainRecord>& record, const std::string& error) {
    nlohmann::json s;
    s["status"] = status;
    s["config"] = config_json(config);
    s["seed"] = config.seed;
    s["threads"] = thread_count();
    s["versions"] = versions_json();
    if (!error.empty()) s["error"] = error;
    if (record && !record->points.empty()) {
        s["final"] = point_json(record->final_point());
        s["best"] = {{"e_lambda", json_or_null(record->best_e_lambda)}};
        s["epochs_run"] = record->epochs_run;
        s["stopped_early"] = record->stopped_early;
    }
    write_text(dir / "summary.json", s.dump(2) + "\n");
}

}  // namespace

std::string format_convergence_csv(const TrainRecord& record) {
    std::ostringstream out;
    out << "epoch,loss,lambda_estimate,e_lambda,e_l2,e_h1,elapsed_seconds\n";
    for (const TrainPoint& p : record.points) {
        out << p.epoch << ',' << field(p.loss) << ',' << field(p.lambda_estimate) << ','
            << field(p.e_lambda) << ',' << field(p.e_l2) << ',' << field(p.e_h1) << ','
            << field(p.elapsed_seconds) << '\n';
    }
    return out.str();
}

RunResult run_experiment(const RunConfig& config, const RunOptions& options) {
    RunResult result;
    result.directory = config.output_dir;
    try {
        validate_config(config);
    } catch (const ConfigError& e) {
        result.exit_code = kExitConfig;
        result.error = e.what();
        return result;
    }
    try {
        std::filesystem::create_directories(result.directory);
    } catch (const std::exception& e) {
        result.exit_code = kExitFailure;
        result.error = e.what();
        return result;
    }

    TnnModel model;
    try {
        const Problem problem = make_problem(config);
        Objective objective(problem, make_grids(config, problem));
        model = init_model(model_options(config, problem), problem.domain, config.seed);

        TrainHooks hooks;
        hooks.stop = [&](const TrainPoint& p) {
            if (options.progress) {
                *options.progress << config.problem << " d=" << config.dimension << " p=" << config.rank
                                  << " epoch " << p.epoch << " loss " << field(p.loss);
                if (p.e_lambda) *options.progress << " e_lambda " << field(p.e_lambda);
                *options.progress << '\n';
            }
            return options.stop && options.stop(p);
        };
        result.record = train(model, objective, make_schedule(config), hooks);
    } catch (const std::exception& e) {
        result.exit_code = kExitFailure;
        result.error = e.what();
        write_summary(result.directory, config, "failed", std::nullopt, result.error);
        return result;
    }

    write_text(result.directory / "convergence.csv", format_convergence_csv(*result.record));
    save_checkpoint(model, result.directory / "model.bin");
    write_summary(result.directory, config, "ok", result.record, "");
    return result;
}

SweepResult sweep_rank(const RunConfig& base, const std::vector<int>& ranks, const RunOptions& options) {
    std::set<int> seen;
    for (int p : ranks) {
        if (p < 1) throw ConfigError("ranks", 0, "ranks must be positive, got " + std::to_string(p));
        if (!seen.insert(p).second) throw ConfigError("ranks", 0, "duplicate rank " + std::to_string(p));
    }
    validate_config(base);

    SweepResult sweep;
    sweep.ranks = ranks;
    const std::filesystem::path root = base.output_dir;
    std::filesystem::create_directories(root);
    std::ostringstream table;
    table << "p,best_e_lambda\n";
    for (int p : ranks) {
        RunConfig c = base;
        c.rank = p;
        c.output_dir = (root / ("p" + std::to_string(p))).string();
        RunResult r = run_experiment(c, options);
        std::optional<double> best;
        if (r.exit_code == kExitOk && r.record) best = r.record->best_e_lambda;
        table << p << ',' << field(best) << '\n';
        if (r.exit_code != kExitOk) sweep.exit_code = kExitFailure;
        sweep.runs.push_back(std::move(r));
    }
    write_text(root / "sweep.csv", table.str());
    return sweep;
}

}  // namespace tnn
