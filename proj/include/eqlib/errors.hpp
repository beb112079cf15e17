#pragma once

#include <stdexcept>
#include <string>

namespace eqlib {

// Exit-code / report categories used by the CLI front end.
enum class ErrorCategory { config, numeric, divergence, io };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), cat_(cat) {}
    ErrorCategory category() const { return cat_; }

private:
    ErrorCategory cat_;
};

// Bad user input: invalid parameters, malformed config, unsupported cost kind.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(ErrorCategory::config, msg) {}
};

// A numerical procedure failed: bracket not found, integrator blow-up,
// quadrature tail not converged, state left the solved grid.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(ErrorCategory::numeric, msg) {}
};

// Training or rollout produced non-finite values.
class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& msg) : Error(ErrorCategory::divergence, msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(ErrorCategory::io, msg) {}
};

inline const char* category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::numeric: return "numeric";
        case ErrorCategory::divergence: return "divergence";
        case ErrorCategory::io: return "io";
    }
    return "unknown";
}

}  // namespace eqlib
