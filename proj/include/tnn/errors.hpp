#pragma once

#include <stdexcept>
#include <string>

namespace tnn {

/// Raised when a computation produces or consumes non-finite values.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The trial function collapsed: its L2 norm vanished relative to its factors.
class DegenerateModelError : public NumericError {
public:
    using NumericError::NumericError;
};

/// A request beyond what the implementation supports (e.g. too many factors).
class CapabilityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid run configuration. Carries the offending key and 1-based line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, int line, const std::string& message)
        : std::runtime_error(format(key, line, message)), key_(std::move(key)), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& key, int line, const std::string& message) {
        std::string out = "config error";
        if (line > 0) out += " (line " + std::to_string(line) + ")";
        if (!key.empty()) out += " [" + key + "]";
        return out + ": " + message;
    }

    std::string key_;
    int line_ = 0;
};

}  // namespace tnn
