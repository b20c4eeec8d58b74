#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tnn/network.hpp"
#include "tnn/problems.hpp"
#include "tnn/quadrature.hpp"
#include "tnn/subnetwork.hpp"
#include "tnn/training.hpp"

namespace tnn {

/// One experiment. Text form: `key = value` lines, `#` starts a comment.
///
///   problem = laplace            # laplace | harmonic | coupled | neumann
///   dimension = 5
///   rank = 10
///   depth = 2
///   width = 50
///   activation = tanh            # tanh | sine
///   subintervals = 10
///   points_per_subinterval = 16
///   optimizer = adam             # adam | gd
///   learning_rate = 0.003        # or lr_segments = 100000:1e-4, 50000:1e-5
///   epochs = 100000
///   log_every = 100
///   seed = 0
///   output_dir = runs/laplace5
///   truncation = 5               # oscillators use [-5, 5]
///
/// Only problem and dimension are required; the rest default per problem.
struct RunConfig {
    std::string problem = "laplace";
    int dimension = 1;
    int rank = 10;
    int depth = 2;
    int width = 50;
    Activation activation = Activation::tanh;
    int subintervals = 10;
    int points_per_subinterval = 16;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::vector<LrSegment> lr_segments;
    std::int64_t epochs = 0;
    std::int64_t log_every = 100;
    std::uint64_t seed = 0;
    std::string output_dir = "output";
    double truncation = 5.0;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Dimensions above this use the reduced ultra-high-dimensional protocol.
constexpr int kUltraDimension = 20;

/// Protocol defaults for a problem and dimension. Throws ConfigError for unknown problems.
RunConfig default_config(const std::string& problem, int dimension);

/// Parses and validates. Throws ConfigError naming the key and line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
/// Every key written explicitly; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);
/// Throws ConfigError on out-of-range values.
void validate_config(const RunConfig& config);

Problem make_problem(const RunConfig& config);
std::vector<Grid1D> make_grids(const RunConfig& config, const Problem& problem);
ModelOptions model_options(const RunConfig& config, const Problem& problem);
TrainSchedule make_schedule(const RunConfig& config);

}  // namespace tnn
