#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tnn/cp_function.hpp"
#include "tnn/diffengine.hpp"
#include "tnn/network.hpp"
#include "tnn/quadrature.hpp"
#include "tnn/subnetwork.hpp"

namespace tnn {

enum class ProblemKind { eigen_dirichlet, bvp_neumann };

/// A benchmark problem: either -Laplace u + v u = lambda u with u = 0 on the
/// boundary, or -Laplace u + c u = f with natural boundary conditions.
struct Problem {
    std::string name;
    ProblemKind kind = ProblemKind::eigen_dirichlet;
    std::vector<Interval> domain;
    std::optional<CpFunction> potential;
    std::optional<CpFunction> rhs;
    std::optional<double> reaction;
    std::optional<double> exact_eigenvalue;
    std::optional<CpFunction> exact_solution;

    int dimension() const noexcept { return static_cast<int>(domain.size()); }
    bool is_eigen() const noexcept { return kind == ProblemKind::eigen_dirichlet; }
    /// Boundary decoration a compatible model must carry.
    Boundary boundary() const noexcept {
        return is_eigen() ? Boundary::dirichlet : Boundary::none;
    }
};

Problem make_laplace(int d);
Problem make_harmonic(int d, Interval truncation = {-5.0, 5.0});
Problem make_coupled(int d, Interval truncation = {-5.0, 5.0});
Problem make_neumann_bvp(int d);

/// Names: laplace, harmonic, coupled, neumann. `truncation` applies to the oscillators.
Problem make_problem(const std::string& name, int d, Interval truncation = {-5.0, 5.0});

/// sum_{i=1..d} sqrt(1 - cos(i pi / (d + 1))), the coupled-oscillator ground energy.
double coupled_ground_energy(int d);

/// |estimate - exact| / |exact|.
double error_lambda(double estimate, double exact);

/// sqrt(max(0, 1 - <u,Psi>^2 / (<u,u><Psi,Psi>))) in L2.
double error_l2_projection(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                           const SampledCp& u);
/// Same with the gradient semi-inner product.
double error_h1_projection(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                           const SampledCp& u);

double error_l2_projection(const TnnModel& model, std::span<const Grid1D> grids, const CpFunction& u);
double error_h1_projection(const TnnModel& model, std::span<const Grid1D> grids, const CpFunction& u);

struct BvpErrors {
    double l2 = 0.0;  // ||u - Psi|| / ||f||
    double h1 = 0.0;  // |u - Psi|_1 / |f|_1
};

BvpErrors error_bvp(std::span<const DualBatch> batches, std::span<const Grid1D> grids,
                    const SampledCp& u, const SampledCp& f);
BvpErrors error_bvp(const TnnModel& model, std::span<const Grid1D> grids, const CpFunction& u,
                    const CpFunction& f);

}  // namespace tnn
