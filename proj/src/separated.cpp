#include "tnn/separated.hpp"

#include <stdexcept>
#include <string>

namespace tnn {

SeparatedSum separated_sum(std::span<const Eigen::MatrixXd> base,
                           std::span<const SeparatedTerm> terms, bool want_cotangents) {
    const int d = static_cast<int>(base.size());
    if (d == 0) throw std::invalid_argument("separated_sum: no dimensions");
    const Eigen::Index rows = base[0].rows();
    const Eigen::Index cols = base[0].cols();
    for (const auto& m : base) {
        if (m.rows() != rows || m.cols() != cols) {
            throw std::invalid_argument("separated_sum: base matrices differ in shape");
        }
    }
    for (const auto& term : terms) {
        int prev = -1;
        for (const auto& [dim, m] : term.factors) {
            if (dim <= prev || dim >= d) {
                throw std::invalid_argument("separated_sum: term dimensions must be sorted, distinct, < d");
            }
            if (m.rows() != rows || m.cols() != cols) {
                throw std::invalid_argument("separated_sum: factor shape differs from base");
            }
            prev = dim;
        }
    }

    // prefix[k] = base[0] .* ... .* base[k-1];  suffix[k] = base[k] .* ... .* base[d-1].
    std::vector<ScaledMatrix> prefix(d + 1), suffix(d + 1);
    prefix[0] = ScaledMatrix::ones(rows, cols);
    for (int k = 0; k < d; ++k) prefix[k + 1] = hadamard(prefix[k], base[k]);
    suffix[d] = ScaledMatrix::ones(rows, cols);
    for (int k = d; k-- > 0;) suffix[k] = hadamard(suffix[k + 1], base[k]);

    SeparatedSum result;
    if (want_cotangents) {
        result.base_cotangents.assign(d, ScaledMatrix::zero(rows, cols));
        result.factor_cotangents.resize(terms.size());
    }

    std::vector<ScaledMatrix> ending(d, ScaledMatrix::zero(rows, cols));
    std::vector<ScaledMatrix> starting(d, ScaledMatrix::zero(rows, cols));
    int plain_terms = 0;

    for (std::size_t t = 0; t < terms.size(); ++t) {
        const auto& factors = terms[t].factors;
        if (factors.empty()) {
            ++plain_terms;
            continue;
        }
        const int first = factors.front().first;
        const int last = factors.back().first;
        const int span = last - first + 1;

        // Resolve G over the span; `slot[k]` is the factor index or -1 for base.
        std::vector<int> slot(span, -1);
        for (std::size_t f = 0; f < factors.size(); ++f) slot[factors[f].first - first] = static_cast<int>(f);
        auto at = [&](int k) -> const Eigen::MatrixXd& {
            const int s = slot[k - first];
            return s < 0 ? base[k] : factors[static_cast<std::size_t>(s)].second;
        };

        std::vector<ScaledMatrix> left(span), right(span);
        left[0] = ScaledMatrix::from(at(first));
        for (int k = first + 1; k <= last; ++k) left[k - first] = hadamard(left[k - first - 1], at(k));
        right[span - 1] = ScaledMatrix::from(at(last));
        for (int k = last - 1; k >= first; --k) right[k - first] = hadamard(right[k - first + 1], at(k));

        const ScaledMatrix& inner = left[span - 1];
        result.value = result.value + hadamard(hadamard(prefix[first], inner), suffix[last + 1]).sum();
        if (!want_cotangents) continue;

        ending[last] = ending[last] + hadamard(prefix[first], inner);
        starting[first] = starting[first] + hadamard(inner, suffix[last + 1]);

        const ScaledMatrix outer = hadamard(prefix[first], suffix[last + 1]);
        auto& factor_cot = result.factor_cotangents[t];
        factor_cot.resize(factors.size());
        for (int k = first; k <= last; ++k) {
            ScaledMatrix cot = outer;
            if (k > first) cot = hadamard(cot, left[k - first - 1]);
            if (k < last) cot = hadamard(cot, right[k - first + 1]);
            const int s = slot[k - first];
            if (s < 0) {
                result.base_cotangents[k] = result.base_cotangents[k] + cot;
            } else {
                factor_cot[static_cast<std::size_t>(s)] = std::move(cot);
            }
        }
    }

    if (plain_terms > 0) {
        result.value = result.value + static_cast<double>(plain_terms) * prefix[d].sum();
    }
    if (!want_cotangents) return result;

    // left_acc[k]: terms ending before k, multiplied through dims < k.
    // right_acc[k]: terms starting at or after k, multiplied through dims >= k.
    std::vector<ScaledMatrix> left_acc(d + 1), right_acc(d + 1);
    left_acc[0] = ScaledMatrix::zero(rows, cols);
    for (int k = 0; k < d; ++k) left_acc[k + 1] = hadamard(left_acc[k], base[k]) + ending[k];
    right_acc[d] = ScaledMatrix::zero(rows, cols);
    for (int k = d; k-- > 0;) right_acc[k] = hadamard(right_acc[k + 1], base[k]) + starting[k];

    for (int k = 0; k < d; ++k) {
        ScaledMatrix cot = result.base_cotangents[k] + hadamard(left_acc[k], suffix[k + 1]) +
                           hadamard(prefix[k], right_acc[k + 1]);
        if (plain_terms > 0) {
            cot = cot + static_cast<double>(plain_terms) * hadamard(prefix[k], suffix[k + 1]);
        }
        result.base_cotangents[k] = std::move(cot);
    }
    return result;
}

}  // namespace tnn
