#include "tnn/log_scaled.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "tnn/errors.hpp"

namespace tnn {
namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

LogScaled LogScaled::from(double value) { return LogScaled{value, 0.0}.normalized(); }

double LogScaled::value() const {
    if (mantissa == 0.0) return 0.0;
    return mantissa * std::exp(log_scale);
}

double LogScaled::log_abs() const {
    if (mantissa == 0.0) return kNegInf;
    return std::log(std::abs(mantissa)) + log_scale;
}

LogScaled LogScaled::normalized() const {
    if (mantissa == 0.0) return {0.0, 0.0};
    if (!std::isfinite(mantissa) || std::isnan(log_scale)) {
        throw NumericError("log-scaled value is not finite");
    }
    int exponent = 0;
    const double frac = std::frexp(mantissa, &exponent);  // |frac| in [0.5, 1)
    return {2.0 * frac, log_scale + (exponent - 1) * std::numbers::ln2};
}

LogScaled operator+(const LogScaled& a, const LogScaled& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const double top = std::max(a.log_scale, b.log_scale);
    const double m = a.mantissa * std::exp(a.log_scale - top) + b.mantissa * std::exp(b.log_scale - top);
    return LogScaled{m, top}.normalized();
}

LogScaled operator-(const LogScaled& a, const LogScaled& b) {
    return a + LogScaled{-b.mantissa, b.log_scale};
}

LogScaled operator*(const LogScaled& a, const LogScaled& b) {
    if (a.is_zero() || b.is_zero()) return {};
    return LogScaled{a.mantissa * b.mantissa, a.log_scale + b.log_scale}.normalized();
}

LogScaled operator*(double a, const LogScaled& b) {
    return LogScaled{a * b.mantissa, b.log_scale}.normalized();
}

LogScaled operator/(const LogScaled& a, const LogScaled& b) {
    if (b.is_zero()) throw NumericError("log-scaled division by zero");
    if (a.is_zero()) return {};
    return LogScaled{a.mantissa / b.mantissa, a.log_scale - b.log_scale}.normalized();
}

double ratio(const LogScaled& a, const LogScaled& b) { return (a / b).value(); }

ScaledMatrix ScaledMatrix::ones(Eigen::Index rows, Eigen::Index cols) {
    return {Eigen::MatrixXd::Ones(rows, cols), 0.0};
}

ScaledMatrix ScaledMatrix::zero(Eigen::Index rows, Eigen::Index cols) {
    return {Eigen::MatrixXd::Zero(rows, cols), kNegInf};
}

ScaledMatrix ScaledMatrix::from(const Eigen::MatrixXd& m) {
    ScaledMatrix s{m, 0.0};
    s.renormalize();
    return s;
}

bool ScaledMatrix::is_zero() const noexcept { return log_scale == kNegInf; }

void ScaledMatrix::renormalize() {
    if (is_zero()) return;
    const double top = mantissa.cwiseAbs().maxCoeff();
    if (!std::isfinite(top)) throw NumericError("non-finite entry in a separated product");
    if (top == 0.0) {
        log_scale = kNegInf;
        return;
    }
    int exponent = 0;
    std::frexp(top, &exponent);
    // Multiplying by a power of two is exact.
    mantissa *= std::ldexp(1.0, -exponent);
    log_scale += exponent * std::numbers::ln2;
}

Eigen::MatrixXd ScaledMatrix::value(double extra_log) const {
    if (is_zero()) return Eigen::MatrixXd::Zero(mantissa.rows(), mantissa.cols());
    return mantissa * std::exp(log_scale + extra_log);
}

LogScaled ScaledMatrix::sum() const {
    if (is_zero()) return {};
    return LogScaled{mantissa.sum(), log_scale}.normalized();
}

ScaledMatrix hadamard(const ScaledMatrix& a, const ScaledMatrix& b) {
    if (a.is_zero() || b.is_zero()) return ScaledMatrix::zero(a.mantissa.rows(), a.mantissa.cols());
    ScaledMatrix out{a.mantissa.cwiseProduct(b.mantissa), a.log_scale + b.log_scale};
    out.renormalize();
    return out;
}

ScaledMatrix hadamard(const ScaledMatrix& a, const Eigen::MatrixXd& b) {
    if (a.is_zero()) return a;
    ScaledMatrix out{a.mantissa.cwiseProduct(b), a.log_scale};
    out.renormalize();
    return out;
}

ScaledMatrix operator+(const ScaledMatrix& a, const ScaledMatrix& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const double top = std::max(a.log_scale, b.log_scale);
    ScaledMatrix out{a.mantissa * std::exp(a.log_scale - top) + b.mantissa * std::exp(b.log_scale - top),
                     top};
    out.renormalize();
    return out;
}

ScaledMatrix operator*(double factor, const ScaledMatrix& a) {
    if (a.is_zero()) return a;
    ScaledMatrix out{factor * a.mantissa, a.log_scale};
    out.renormalize();
    return out;
}

}  // namespace tnn
