#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tnn::checks {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// n-point rules integrate x^k exactly for k <= 2n - 1, n = 1..max_n.
CheckResult quadrature_exactness(int max_n, double tolerance);

/// Randomized separated integrals against full tensor-grid quadrature, d in {2,3}, p in {1,2,3}.
CheckResult oracle_equivalence(int cases, std::uint64_t seed, double tolerance);

/// Loss gradients against central differences for every catalog problem at d = 2.
CheckResult gradient_correctness(double step, double tolerance);

/// Forward derivatives against central differences of the values, over random nets.
CheckResult jet_consistency(int seeds, double tolerance);

/// Every check above at its acceptance tolerance.
std::vector<CheckResult> quick_suite();

}  // namespace tnn::checks
