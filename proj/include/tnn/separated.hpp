#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tnn/log_scaled.hpp"

namespace tnn {

/// One summand of a separated product sum. Dimensions listed in `factors` use the
/// given matrix; every other dimension uses the shared base matrix.
/// Factors are sorted by dimension with no repeats. An empty term is the plain
/// product of the base matrices.
struct SeparatedTerm {
    std::vector<std::pair<int, Eigen::MatrixXd>> factors;
};

struct SeparatedSum {
    LogScaled value;
    /// d(value)/d(base[i]), one per dimension.
    std::vector<ScaledMatrix> base_cotangents;
    /// d(value)/d(terms[t].factors[f].second).
    std::vector<std::vector<ScaledMatrix>> factor_cotangents;
};

/// value = sum_t sum_{entries} (G_{0,t} .* G_{1,t} .* ... .* G_{d-1,t}),
/// where G_{i,t} is the term's override for dimension i or base[i] otherwise.
///
/// Work is O((d + sum_t span_t) * entries), where span_t is the distance between a
/// term's first and last overridden dimension; prefix/suffix Hadamard products give
/// every cotangent without re-forming the (d-1)-fold products.
/// Matrices may be p x p Grams or p x 1 vectors; all must share a shape.
SeparatedSum separated_sum(std::span<const Eigen::MatrixXd> base,
                           std::span<const SeparatedTerm> terms, bool want_cotangents);

}  // namespace tnn
