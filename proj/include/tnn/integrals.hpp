#pragma once

#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tnn/cp_function.hpp"
#include "tnn/diffengine.hpp"
#include "tnn/log_scaled.hpp"
#include "tnn/quadrature.hpp"
#include "tnn/separated.hpp"

namespace tnn {

// --- One-dimensional Gram assembly -------------------------------------------

/// M(j,k) = sum_n w_n phi_j(x_n) phi_k(x_n)
Eigen::MatrixXd gram_mass(const DualBatch& batch, const Grid1D& grid);
/// S(j,k) = sum_n w_n phi_j'(x_n) phi_k'(x_n)
Eigen::MatrixXd gram_stiffness(const DualBatch& batch, const Grid1D& grid);
/// W(j,k) = sum_n w_n g(x_n) phi_j(x_n) phi_k(x_n)
Eigen::MatrixXd gram_weighted(const DualBatch& batch, const Grid1D& grid,
                              const std::function<double(double)>& g);
Eigen::MatrixXd gram_weighted(const DualBatch& batch, const Grid1D& grid,
                              const Eigen::VectorXd& g_samples);
/// b(j) = sum_n w_n g(x_n) phi_j(x_n), or phi_j' when use_derivative is set.
Eigen::VectorXd cross_vector(const DualBatch& batch, const Grid1D& grid,
                             const std::function<double(double)>& g, bool use_derivative);
Eigen::VectorXd cross_vector(const DualBatch& batch, const Grid1D& grid,
                             const Eigen::VectorXd& g_samples, bool use_derivative);

// --- Separated d-dimensional integrals ---------------------------------------

/// Per-dimension Grams, each divided by its mass diagonal mean exp(log_scale[i]).
struct GramSet {
    std::vector<Eigen::MatrixXd> mass;
    std::vector<Eigen::MatrixXd> stiffness;
    /// term index -> (dimension, weighted Gram) for the non-constant factors of the potential.
    std::map<int, std::vector<std::pair<int, Eigen::MatrixXd>>> weighted;
    int potential_rank = 0;
    std::vector<double> log_scale;

    int dimension() const noexcept { return static_cast<int>(mass.size()); }
    double total_log_scale() const;
};

/// Builds the GramSet from per-dimension batches. When `potential` is given, a
/// weighted Gram is formed for each of its non-constant factors.
GramSet assemble_grams(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                       const SampledCp* potential = nullptr);

/// integral of Psi^2: sum of entries of M_1 .* ... .* M_d.
LogScaled integral_psi2(const GramSet& grams);
/// integral of |grad Psi|^2: sum_i sum of entries of S_i .* prod_{i' != i} M_{i'}.
LogScaled integral_grad2(const GramSet& grams);
/// integral of v Psi^2 over the CP terms of v (grams must carry v's weighted Grams).
LogScaled integral_weighted_psi2(const GramSet& grams, const CpFunction& v);

/// Separated terms equivalent to the integrals above; shared with the loss gradients.
std::vector<SeparatedTerm> grad2_terms(const GramSet& grams);
std::vector<SeparatedTerm> weighted_terms(const GramSet& grams);

/// Each entry selects Psi (kPsi) or d Psi / d x_i (the dimension index i).
struct FactorSpec {
    static constexpr int kPsi = -1;
    std::vector<int> factors;
};

constexpr int kMaxFactors = 4;

/// integral of coeff(x) * prod_t D^{beta_t} Psi(x) by splitting into one-dimensional
/// integrals per CP term and per index tuple (j_1..j_T). Cost grows like p^T, so
/// T is capped at kMaxFactors (CapabilityError beyond).
LogScaled cp_product_integral(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                              const CpFunction& coeff, const FactorSpec& spec);

/// <u, Psi> in L2, or the gradient pairing <grad u, grad Psi> when `gradient` is set.
LogScaled inner_cp_psi(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                       const SampledCp& u, bool gradient);
/// <u, v> in L2, or <grad u, grad v> when `gradient` is set.
LogScaled inner_cp_cp(const SampledCp& u, const SampledCp& v, std::span<const Grid1D> grids,
                      bool gradient);

}  // namespace tnn
