#include "tnn/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "tnn/parallel.hpp"

namespace tnn {

std::string_view to_string(Activation a) {
    return a == Activation::tanh ? "tanh" : "sine";
}

std::string_view to_string(Boundary b) {
    return b == Boundary::dirichlet ? "dirichlet" : "none";
}

Activation parse_activation(std::string_view name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "sine" || name == "sin") return Activation::sine;
    throw std::invalid_argument("unknown activation '" + std::string(name) + "' (tanh, sine)");
}

Boundary parse_boundary(std::string_view name) {
    if (name == "dirichlet") return Boundary::dirichlet;
    if (name == "none") return Boundary::none;
    throw std::invalid_argument("unknown boundary '" + std::string(name) + "' (dirichlet, none)");
}

std::vector<Eigen::Index> SubNetwork::layer_dims() const {
    std::vector<Eigen::Index> dims;
    if (layers.empty()) return dims;
    dims.push_back(layers.front().weight.cols());
    for (const auto& layer : layers) dims.push_back(layer.weight.rows());
    return dims;
}

Eigen::Index SubNetwork::parameter_count() const {
    Eigen::Index count = 0;
    for (const auto& layer : layers) count += layer.weight.size() + layer.bias.size();
    return count;
}

void SubNetwork::validate() const {
    if (layers.empty()) throw std::invalid_argument("SubNetwork: no layers");
    if (layers.front().weight.cols() != 1) {
        throw std::invalid_argument("SubNetwork: first layer must take a scalar input");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.bias.size() != layer.weight.rows()) {
            throw std::invalid_argument("SubNetwork: bias/weight mismatch in layer " +
                                        std::to_string(l));
        }
        if (l > 0 && layer.weight.cols() != layers[l - 1].weight.rows()) {
            throw std::invalid_argument("SubNetwork: layer " + std::to_string(l) +
                                        " does not chain with its predecessor");
        }
    }
    if (!(interval.lo < interval.hi)) throw std::invalid_argument("SubNetwork: empty interval");
    if (!(output_scale > 0.0)) throw std::invalid_argument("SubNetwork: output_scale must be > 0");
}

TnnModel::TnnModel(std::vector<SubNetwork> subnets) : subnets_(std::move(subnets)) {
    for (const auto& net : subnets_) {
        net.validate();
        if (net.rank() != subnets_.front().rank()) {
            throw std::invalid_argument("TnnModel: subnetworks must share the rank p");
        }
    }
}

Eigen::Index TnnModel::parameter_count() const {
    Eigen::Index count = 0;
    for (const auto& net : subnets_) count += net.parameter_count();
    return count;
}

std::vector<Interval> TnnModel::domain() const {
    std::vector<Interval> box;
    box.reserve(subnets_.size());
    for (const auto& net : subnets_) box.push_back(net.interval);
    return box;
}

bool operator==(const TnnModel& a, const TnnModel& b) {
    if (a.subnets_.size() != b.subnets_.size()) return false;
    for (std::size_t i = 0; i < a.subnets_.size(); ++i) {
        const SubNetwork& x = a.subnets_[i];
        const SubNetwork& y = b.subnets_[i];
        if (!(x.interval == y.interval) || x.activation != y.activation ||
            x.boundary != y.boundary || x.output_scale != y.output_scale ||
            x.layers.size() != y.layers.size()) {
            return false;
        }
        for (std::size_t l = 0; l < x.layers.size(); ++l) {
            if (x.layers[l].weight.rows() != y.layers[l].weight.rows() ||
                x.layers[l].weight.cols() != y.layers[l].weight.cols() ||
                x.layers[l].weight != y.layers[l].weight || x.layers[l].bias != y.layers[l].bias) {
                return false;
            }
        }
    }
    return true;
}

TnnModel init_model(const ModelOptions& options, std::span<const Interval> intervals,
                    std::uint64_t seed) {
    if (options.dimension < 1 || options.rank < 1 || options.depth < 0 || options.width < 1) {
        throw std::invalid_argument("init_model: dimension, rank, width must be >= 1, depth >= 0");
    }
    if (static_cast<int>(intervals.size()) != options.dimension) {
        throw std::invalid_argument("init_model: need one interval per dimension");
    }

    std::vector<Eigen::Index> dims{1};
    for (int h = 0; h < options.depth; ++h) dims.push_back(options.width);
    dims.push_back(options.rank);

    std::vector<SubNetwork> subnets;
    subnets.reserve(intervals.size());
    for (int i = 0; i < options.dimension; ++i) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(i)};
        std::mt19937_64 rng(seq);

        SubNetwork net;
        net.interval = intervals[static_cast<std::size_t>(i)];
        net.activation = options.activation;
        net.boundary = options.boundary;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
            std::uniform_real_distribution<double> dist(-bound, bound);
            DenseLayer layer{Eigen::MatrixXd(dims[l + 1], dims[l]), Eigen::VectorXd(dims[l + 1])};
            // Fill column-major so the draw order is fixed by the storage layout.
            for (Eigen::Index k = 0; k < layer.weight.size(); ++k) layer.weight.data()[k] = dist(rng);
            for (Eigen::Index k = 0; k < layer.bias.size(); ++k) layer.bias(k) = dist(rng);
            net.layers.push_back(std::move(layer));
        }

        // Unit diagonal mean of the mass Gram keeps d-fold products O(1).
        const Grid1D reference(net.interval.lo, net.interval.hi, 10, 16);
        const DualBatch batch = forward_dual(net, reference.nodes());
        const double diag_mean =
            (batch.values.array().square().rowwise() * reference.weights().transpose().array())
                .sum() /
            static_cast<double>(options.rank);
        if (diag_mean > 0.0 && std::isfinite(diag_mean)) net.output_scale = 1.0 / std::sqrt(diag_mean);
        subnets.push_back(std::move(net));
    }
    return TnnModel(std::move(subnets));
}

double evaluate_point(const TnnModel& model, std::span<const double> x) {
    if (static_cast<int>(x.size()) != model.dimension()) {
        throw std::invalid_argument("evaluate_point: point has wrong dimension");
    }
    Eigen::ArrayXd product = Eigen::ArrayXd::Ones(model.rank());
    for (int i = 0; i < model.dimension(); ++i) {
        const SubNetwork& net = model.subnet(i);
        if (!net.interval.contains(x[static_cast<std::size_t>(i)])) {
            throw std::invalid_argument("evaluate_point: coordinate " + std::to_string(i) +
                                        " outside the domain");
        }
        Eigen::VectorXd xi(1);
        xi(0) = x[static_cast<std::size_t>(i)];
        product *= forward_dual(net, xi).values.col(0).array();
    }
    return product.sum();
}

namespace {
void check_grids(const TnnModel& model, std::span<const Grid1D> grids) {
    if (static_cast<int>(grids.size()) != model.dimension()) {
        throw std::invalid_argument("evaluate_grid: need one grid per dimension");
    }
    for (int i = 0; i < model.dimension(); ++i) {
        if (!(grids[static_cast<std::size_t>(i)].interval() == model.subnet(i).interval)) {
            throw std::invalid_argument("evaluate_grid: grid interval of dimension " +
                                        std::to_string(i) + " does not match the subnetwork");
        }
    }
}
}  // namespace

std::vector<DualBatch> evaluate_grid(const TnnModel& model, std::span<const Grid1D> grids) {
    check_grids(model, grids);
    std::vector<DualBatch> batches(grids.size());
    for_each_index(model.dimension(), [&](int i) {
        batches[static_cast<std::size_t>(i)] =
            forward_dual(model.subnet(i), grids[static_cast<std::size_t>(i)].nodes());
    });
    return batches;
}

std::vector<ForwardTape> record_grid(const TnnModel& model, std::span<const Grid1D> grids) {
    check_grids(model, grids);
    std::vector<ForwardTape> tapes(grids.size());
    for_each_index(model.dimension(), [&](int i) {
        tapes[static_cast<std::size_t>(i)] =
            record_forward(model.subnet(i), grids[static_cast<std::size_t>(i)].nodes());
    });
    return tapes;
}

}  // namespace tnn
