#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tnn/diffengine.hpp"
#include "tnn/quadrature.hpp"
#include "tnn/subnetwork.hpp"

namespace tnn {

struct ModelOptions {
    int dimension = 1;
    int rank = 1;
    int depth = 2;   // hidden layers
    int width = 50;  // neurons per hidden layer
    Activation activation = Activation::tanh;
    Boundary boundary = Boundary::dirichlet;
};

/// Psi(x) = sum_j prod_i phi_{i,j}(x_i) over d subnetworks of common rank p.
class TnnModel {
public:
    TnnModel() = default;
    explicit TnnModel(std::vector<SubNetwork> subnets);

    int dimension() const noexcept { return static_cast<int>(subnets_.size()); }
    Eigen::Index rank() const noexcept { return subnets_.empty() ? 0 : subnets_.front().rank(); }
    Eigen::Index parameter_count() const;
    std::vector<Interval> domain() const;

    const SubNetwork& subnet(int i) const { return subnets_.at(static_cast<std::size_t>(i)); }
    SubNetwork& subnet(int i) { return subnets_.at(static_cast<std::size_t>(i)); }
    const std::vector<SubNetwork>& subnets() const noexcept { return subnets_; }
    std::vector<SubNetwork>& subnets() noexcept { return subnets_; }

    friend bool operator==(const TnnModel& a, const TnnModel& b);

private:
    std::vector<SubNetwork> subnets_;
};

/// Deterministic in `seed`. Layers are drawn uniformly in +-1/sqrt(fan_in); each
/// subnetwork's output_scale is then set so its mass Gram on a reference 10x16
/// rule of its interval has unit diagonal mean.
TnnModel init_model(const ModelOptions& options, std::span<const Interval> intervals,
                    std::uint64_t seed);

/// Point probe of Psi. Throws std::invalid_argument outside the domain box.
double evaluate_point(const TnnModel& model, std::span<const double> x);

/// forward_dual of each subnetwork on its grid.
std::vector<DualBatch> evaluate_grid(const TnnModel& model, std::span<const Grid1D> grids);

/// Same, keeping the tapes needed for parameter gradients.
std::vector<ForwardTape> record_grid(const TnnModel& model, std::span<const Grid1D> grids);

// Binary checkpoint: header, shapes, then raw IEEE-754 doubles. Round-trips bit-exactly.
std::string serialize_model(const TnnModel& model);
TnnModel deserialize_model(const std::string& bytes);
void save_checkpoint(const TnnModel& model, const std::filesystem::path& path);
TnnModel load_checkpoint(const std::filesystem::path& path);

}  // namespace tnn
