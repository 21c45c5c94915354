#pragma once

#include <stdexcept>
#include <string>

namespace rescap {

/// Broad failure classes. The CLI maps each to its own exit code.
enum class ErrorKind {
    config,       // bad parameters or malformed input files
    convergence,  // a numerical procedure did not reach its tolerance
    model,        // the input process or reservoir violates a model assumption
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& detail)
        : std::runtime_error(detail), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// Stable machine-readable identifier, e.g. "echo_state_violated".
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

inline Error config_error(std::string code, const std::string& detail) {
    return Error(ErrorKind::config, std::move(code), detail);
}
inline Error convergence_error(std::string code, const std::string& detail) {
    return Error(ErrorKind::convergence, std::move(code), detail);
}
inline Error model_error(std::string code, const std::string& detail) {
    return Error(ErrorKind::model, std::move(code), detail);
}

}  // namespace rescap
