#pragma once

#include <stdexcept>
#include <string>

namespace itherm {

/// Machine-readable failure categories surfaced by the library.
enum class ErrorCode {
    invalid_argument,
    ambiguous_regime,
    nonconvergent_quadrature,
    truncation_not_converged,
    grid_too_narrow,
    delta_state,
    step_underflow,
    singular_fim,
    zero_information,
    zero_signal,
    out_of_range,
    no_root,
    nonunique_root,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_argument: return "INVALID_ARGUMENT";
        case ErrorCode::ambiguous_regime: return "AMBIGUOUS_REGIME";
        case ErrorCode::nonconvergent_quadrature: return "NONCONVERGENT_QUADRATURE";
        case ErrorCode::truncation_not_converged: return "TRUNCATION_NOT_CONVERGED";
        case ErrorCode::grid_too_narrow: return "GRID_TOO_NARROW";
        case ErrorCode::delta_state: return "DELTA_STATE";
        case ErrorCode::step_underflow: return "STEP_UNDERFLOW";
        case ErrorCode::singular_fim: return "SINGULAR_FIM";
        case ErrorCode::zero_information: return "ZERO_INFORMATION";
        case ErrorCode::zero_signal: return "ZERO_SIGNAL";
        case ErrorCode::out_of_range: return "OUT_OF_RANGE";
        case ErrorCode::no_root: return "NO_ROOT";
        case ErrorCode::nonunique_root: return "NONUNIQUE_ROOT";
    }
    return "UNKNOWN";
}

/// All library failures are reported as Error; code() distinguishes
/// validation problems from numerical-convergence problems.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// True for failures of an iterative numerical procedure (as opposed to
    /// bad inputs). CLI maps these to a distinct exit status.
    bool is_numerical() const noexcept {
        switch (code_) {
            case ErrorCode::nonconvergent_quadrature:
            case ErrorCode::truncation_not_converged:
            case ErrorCode::grid_too_narrow:
            case ErrorCode::step_underflow:
            case ErrorCode::no_root:
            case ErrorCode::nonunique_root:
                return true;
            default:
                return false;
        }
    }

  private:
    ErrorCode code_;
};

}  // namespace itherm
