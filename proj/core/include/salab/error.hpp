#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace salab {

/// Failure categories used across the library. The CLI maps these to exit codes.
enum class ErrorKind {
    Argument,    // bad call arguments (N0 >= N, too few batches, ...)
    Domain,      // parameter outside its mathematical domain (beta >= 1, ...)
    Layout,      // chain state shape does not match the chain kind
    Capability,  // the operation is not defined for this model/chain
    Structure,   // structural defect in the input (reducible chain, ...)
    Spectrum,    // matrix fails a spectral precondition (not Hurwitz, ...)
    Numerical,   // a linear solve or iteration failed numerically
    Divergence,  // iterates left the admissible region
    Config,      // experiment configuration rejected
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Thrown when a trajectory leaves the admissible region; carries the step index.
class DivergenceError : public Error {
public:
    DivergenceError(std::size_t step, const std::string& what)
        : Error(ErrorKind::Divergence, what + " at step " + std::to_string(step)), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Argument: return "argument error";
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::Layout: return "layout error";
        case ErrorKind::Capability: return "capability error";
        case ErrorKind::Structure: return "structure error";
        case ErrorKind::Spectrum: return "spectrum error";
        case ErrorKind::Numerical: return "numerical error";
        case ErrorKind::Divergence: return "divergence error";
        case ErrorKind::Config: return "config error";
    }
    return "error";
}

}  // namespace salab
