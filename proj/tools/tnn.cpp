#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tnn/checks.hpp"
#include "tnn/config.hpp"
#include "tnn/errors.hpp"
#include "tnn/experiment.hpp"
#include "tnn/parallel.hpp"

namespace {

// TNN_OUTPUT_DIR replaces the configured output directory, TNN_THREADS the worker count.
void apply_environment(tnn::RunConfig& config) {
    if (const char* dir = std::getenv("TNN_OUTPUT_DIR"); dir && *dir) config.output_dir = dir;
}

int apply_threads() {
    const char* env = std::getenv("TNN_THREADS");
    if (!env || !*env) return 0;
    try {
        std::size_t used = 0;
        const int n = std::stoi(env, &used);
        if (used != std::string(env).size() || n < 1) throw std::invalid_argument(env);
        tnn::set_thread_count(n);
    } catch (const std::exception&) {
        std::cerr << "TNN_THREADS must be a positive integer, got '" << env << "'\n";
        return tnn::kExitConfig;
    }
    return 0;
}

std::vector<int> parse_ranks(const std::string& text) {
    std::vector<int> ranks;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        std::size_t used = 0;
        const int p = std::stoi(item, &used);
        if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        ranks.push_back(p);
    }
    return ranks;
}

int report(const tnn::RunResult& r) {
    if (r.exit_code == tnn::kExitOk) {
        const auto& last = r.record->final_point();
        std::cout << "finished at epoch " << last.epoch << ", loss " << last.loss;
        if (r.record->best_e_lambda) std::cout << ", best e_lambda " << *r.record->best_e_lambda;
        std::cout << "\noutputs in " << r.directory.string() << "\n";
    } else {
        std::cerr << "error: " << r.error << "\n";
    }
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    tnn::tune_allocator();
    CLI::App app{"Tensor neural network solver for high-dimensional eigenvalue and boundary value problems"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Suppress per-log-point progress");

    std::string config_path;
    auto* run = app.add_subcommand("run", "Train one configuration");
    run->add_option("config", config_path, "Config file")->required();

    std::string sweep_path, ranks_text;
    auto* sweep = app.add_subcommand("sweep", "Train the configuration once per rank");
    sweep->add_option("config", sweep_path, "Config file")->required();
    sweep->add_option("--ranks", ranks_text, "Comma-separated ranks, e.g. 1,2,4,8")->required();

    auto* check = app.add_subcommand("check", "Run the quick oracle and property checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : tnn::kExitConfig;
    }
    if (const int rc = apply_threads()) return rc;

    tnn::RunOptions options;
    if (!quiet) options.progress = &std::cerr;

    try {
        if (*run) {
            tnn::RunConfig config = tnn::load_config(config_path);
            apply_environment(config);
            return report(tnn::run_experiment(config, options));
        }
        if (*sweep) {
            tnn::RunConfig config = tnn::load_config(sweep_path);
            apply_environment(config);
            std::vector<int> ranks;
            try {
                ranks = parse_ranks(ranks_text);
            } catch (const std::exception&) {
                throw tnn::ConfigError("ranks", 0, "expected comma-separated integers, got '" + ranks_text + "'");
            }
            const tnn::SweepResult result = tnn::sweep_rank(config, ranks, options);
            for (std::size_t k = 0; k < result.runs.size(); ++k) {
                std::cout << "p=" << result.ranks[k] << ": "
                          << (result.runs[k].exit_code == 0 ? "ok" : "failed: " + result.runs[k].error) << "\n";
            }
            std::cout << "table in " << config.output_dir << "/sweep.csv\n";
            return result.exit_code;
        }
        if (*check) {
            bool all = true;
            for (const auto& r : tnn::checks::quick_suite()) {
                std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
                all = all && r.passed;
            }
            return all ? tnn::kExitOk : tnn::kExitFailure;
        }
    } catch (const tnn::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return tnn::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tnn::kExitFailure;
    }
    return tnn::kExitOk;
}
