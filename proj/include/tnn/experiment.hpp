#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tnn/config.hpp"
#include "tnn/training.hpp"

namespace tnn {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitFailure = 2 };

struct RunOptions {
    /// Progress lines per logged point; null for silence.
    std::ostream* progress = nullptr;
    /// Optional early stop, consulted after each logged point.
    std::function<bool(const TrainPoint&)> stop;
};

struct RunResult {
    int exit_code = kExitOk;
    std::filesystem::path directory;
    std::optional<TrainRecord> record;
    std::string error;
};

/// Trains one configuration and writes into config.output_dir:
///   convergence.csv  epoch,loss,lambda_estimate,e_lambda,e_l2,e_h1,elapsed_seconds
///   summary.json     status, final and best metrics, config echo, seed, versions
///   model.bin        checkpoint of the final model
RunResult run_experiment(const RunConfig& config, const RunOptions& options = {});

struct SweepResult {
    int exit_code = kExitOk;
    std::vector<int> ranks;
    std::vector<RunResult> runs;
};

/// One run per rank in <output_dir>/p<rank>, all with the base seed, plus
/// <output_dir>/sweep.csv with columns p,best_e_lambda. Failed runs leave the
/// error field empty and the sweep continues; exit_code is then kExitFailure.
/// Duplicate or non-positive ranks throw ConfigError.
SweepResult sweep_rank(const RunConfig& base, const std::vector<int>& ranks,
                       const RunOptions& options = {});

/// CSV text of a record, as written to convergence.csv.
std::string format_convergence_csv(const TrainRecord& record);

}  // namespace tnn
