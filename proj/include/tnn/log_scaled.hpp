#pragma once

#include <Eigen/Core>

namespace tnn {

/// A real number stored as mantissa * exp(log_scale). Survives d-fold products of
/// sub-unit factors that would underflow a plain double.
struct LogScaled {
    double mantissa = 0.0;
    double log_scale = 0.0;

    static LogScaled from(double value);

    double value() const;
    /// log|value|; -inf for zero.
    double log_abs() const;
    bool is_zero() const noexcept { return mantissa == 0.0; }
    int sign() const noexcept { return (mantissa > 0.0) - (mantissa < 0.0); }

    /// Brings |mantissa| into [1, 2) with an exact power-of-two rescale.
    LogScaled normalized() const;
    LogScaled scaled_log(double extra_log) const { return {mantissa, log_scale + extra_log}; }

    friend LogScaled operator+(const LogScaled& a, const LogScaled& b);
    friend LogScaled operator-(const LogScaled& a, const LogScaled& b);
    friend LogScaled operator*(const LogScaled& a, const LogScaled& b);
    friend LogScaled operator*(double a, const LogScaled& b);
    friend LogScaled operator/(const LogScaled& a, const LogScaled& b);
};

/// a / b as a plain double.
double ratio(const LogScaled& a, const LogScaled& b);

/// Matrix stored as mantissa * exp(log_scale); zero is mantissa 0 with log_scale -inf.
struct ScaledMatrix {
    Eigen::MatrixXd mantissa;
    double log_scale = 0.0;

    static ScaledMatrix ones(Eigen::Index rows, Eigen::Index cols);
    static ScaledMatrix zero(Eigen::Index rows, Eigen::Index cols);
    static ScaledMatrix from(const Eigen::MatrixXd& m);

    bool is_zero() const noexcept;
    /// Rescales by a power of two so the largest |entry| lies in [0.5, 1).
    /// Throws NumericError on non-finite entries.
    void renormalize();

    /// Entries times exp(extra_log) as plain doubles (entries may underflow to 0).
    Eigen::MatrixXd value(double extra_log = 0.0) const;
    /// Sum of all entries.
    LogScaled sum() const;
};

ScaledMatrix hadamard(const ScaledMatrix& a, const ScaledMatrix& b);
ScaledMatrix hadamard(const ScaledMatrix& a, const Eigen::MatrixXd& b);
ScaledMatrix operator+(const ScaledMatrix& a, const ScaledMatrix& b);
ScaledMatrix operator*(double factor, const ScaledMatrix& a);

}  // namespace tnn
