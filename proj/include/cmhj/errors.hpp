#pragma once

#include <stdexcept>
#include <string>

namespace cmhj {

/// Failure categories. The CLI maps config/domain/validation to exit code 2
/// and everything numerical to exit code 3.
enum class ErrorKind {
    evaluation,    // non-finite Hamiltonian value or derivative
    integration,   // characteristic left the magnitude cap
    shooting,      // Newton for the generating function did not converge
    conditioning,  // singular shooting Jacobian
    truncation,    // cutoff constants could not be certified
    window,        // saddle or seed on the search-window boundary
    config,        // invalid user parameters (CFL, grid sizes, keys)
    domain,        // input outside the operation's hypotheses
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::evaluation: return "evaluation-error";
        case ErrorKind::integration: return "integration-error";
        case ErrorKind::shooting: return "shooting-error";
        case ErrorKind::conditioning: return "conditioning-error";
        case ErrorKind::truncation: return "truncation-error";
        case ErrorKind::window: return "window-error";
        case ErrorKind::config: return "config-error";
        case ErrorKind::domain: return "domain-error";
    }
    return "error";
}

inline bool is_validation(ErrorKind k) {
    return k == ErrorKind::config || k == ErrorKind::domain;
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace cmhj
