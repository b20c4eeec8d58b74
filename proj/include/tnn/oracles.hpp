#pragma once

// Brute-force references for testing. Everything here is deliberately naive:
// full tensor-product quadrature, explicit loops, finite differences. None of it
// is used by training.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tnn/cp_function.hpp"
#include "tnn/diffengine.hpp"
#include "tnn/integrals.hpp"
#include "tnn/network.hpp"
#include "tnn/quadrature.hpp"
#include "tnn/training.hpp"

namespace tnn::oracle {

/// Gauss–Legendre nodes and weights from the eigen-decomposition of the Jacobi matrix.
GaussRule golub_welsch(int n);

/// Naive triple-loop Gram sum_n w_n g_n a_j(x_n) b_k(x_n).
Eigen::MatrixXd naive_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::VectorXd& w);

/// Psi and grad Psi at one tensor-grid node given per-dimension node indices.
double psi_at(std::span<const DualBatch> batches, std::span<const Eigen::Index> idx);
double dpsi_at(std::span<const DualBatch> batches, std::span<const Eigen::Index> idx, int k);

/// sum over every node tuple of (prod_i w_i) * f(node indices, coordinates).
double full_grid(std::span<const Grid1D> grids,
                 const std::function<double(std::span<const Eigen::Index>, std::span<const double>)>& f);

double psi2(std::span<const DualBatch> batches, std::span<const Grid1D> grids);
double grad2(std::span<const DualBatch> batches, std::span<const Grid1D> grids);
double weighted_psi2(std::span<const DualBatch> batches, std::span<const Grid1D> grids, const CpFunction& v);
double load(std::span<const DualBatch> batches, std::span<const Grid1D> grids, const CpFunction& f);
double product(std::span<const DualBatch> batches, std::span<const Grid1D> grids, const CpFunction& coeff,
               const FactorSpec& spec);
/// <u, Psi> or <grad u, grad Psi>, pointwise evaluation of u.
double inner_u_psi(std::span<const DualBatch> batches, std::span<const Grid1D> grids, const CpFunction& u,
                   bool gradient);
double inner_u_u(std::span<const Grid1D> grids, const CpFunction& u, const CpFunction& v, bool gradient);

double rayleigh(std::span<const DualBatch> batches, std::span<const Grid1D> grids, const CpFunction* v);
double ritz(std::span<const DualBatch> batches, std::span<const Grid1D> grids, const CpFunction& f,
            double reaction);
double projection_error(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                        const CpFunction& u, bool gradient);
/// (||u - Psi|| / ||f||, |u - Psi|_1 / |f|_1)
std::pair<double, double> bvp_errors(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                                     const CpFunction& u, const CpFunction& f);

/// Central differences of `loss` in every model parameter, step h.
ModelGradient finite_difference_gradient(const TnnModel& model,
                                         const std::function<double(const TnnModel&)>& loss, double h);

struct GradientComparison {
    double max_relative_error = 0.0;
    double max_abs_error = 0.0;
    double gradient_norm_inf = 0.0;
};

/// Entry-wise |a - b| / max(|a|, |b|, floor_fraction * ||b||_inf), maximized.
GradientComparison compare_gradients(const ModelGradient& analytic, const ModelGradient& reference,
                                     double floor_fraction);

/// Random smooth CP function: each factor is a + b x + c x^2 + s sin(k x), random
/// coefficients; some factors are left identically one.
CpFunction random_cp(int dimension, int rank, std::uint64_t seed);

/// Randomized subnetwork outputs for a model (weights perturbed away from init).
TnnModel random_model(int dimension, int rank, int depth, int width, Activation activation,
                      Boundary boundary, std::span<const Interval> domain, std::uint64_t seed);

}  // namespace tnn::oracle
