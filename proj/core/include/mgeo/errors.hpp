#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mgeo {

/// Error taxonomy shared across the library. Callers that want to branch on
/// the failure kind should catch `Error` and inspect `code()`.
enum class ErrorCode {
  InvalidInput,
  DegenerateNormal,
  OffManifold,
  AntipodalPoints,
  ConvergenceFailure,
  NumericalBlowup,
  DegenerateInput,
  MinWindow,
  SingularFit,
  ScaleCapExceeded,
  IllConditioned,
  IllConditionedKernel,
  IngestError,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::DegenerateNormal: return "DegenerateNormal";
    case ErrorCode::OffManifold: return "OffManifold";
    case ErrorCode::AntipodalPoints: return "AntipodalPoints";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::NumericalBlowup: return "NumericalBlowup";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::MinWindow: return "MinWindow";
    case ErrorCode::SingularFit: return "SingularFit";
    case ErrorCode::ScaleCapExceeded: return "ScaleCapExceeded";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::IllConditionedKernel: return "IllConditionedKernel";
    case ErrorCode::IngestError: return "IngestError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Iterative solver failure that still carries the best iterate found.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd last)
      : Error(ErrorCode::ConvergenceFailure, what), last_iterate(std::move(last)) {}

  Eigen::VectorXd last_iterate;
};

/// Numerical blow-up during path simulation; records the offending step.
class BlowupError : public Error {
 public:
  BlowupError(const std::string& what, std::size_t step)
      : Error(ErrorCode::NumericalBlowup, what + " at step " + std::to_string(step)),
        step_index(step) {}

  std::size_t step_index;
};

}  // namespace mgeo
