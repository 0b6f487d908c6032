#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spdada {

enum class ErrorKind {
  InvalidInput,
  NonPositiveEigenvalue,
  NumericalOverflow,
  ZeroGradient,
  BacktrackExhausted,
  UnsupportedKind,
  InputMissing,
  InconsistentInputs,
  InsufficientData,
  WrongSolver,
  EmptyProfile,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::NonPositiveEigenvalue: return "NonPositiveEigenvalue";
    case ErrorKind::NumericalOverflow: return "NumericalOverflow";
    case ErrorKind::ZeroGradient: return "ZeroGradient";
    case ErrorKind::BacktrackExhausted: return "BacktrackExhausted";
    case ErrorKind::UnsupportedKind: return "UnsupportedKind";
    case ErrorKind::InputMissing: return "InputMissing";
    case ErrorKind::InconsistentInputs: return "InconsistentInputs";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::WrongSolver: return "WrongSolver";
    case ErrorKind::EmptyProfile: return "EmptyProfile";
  }
  return "Unknown";
}

/// Every failure raised by the library. `value()` carries the offending
/// number when there is one (e.g. the minimum eigenvalue), NaN otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double value = std::nan(""))
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        value_(value) {}

  ErrorKind kind() const noexcept { return kind_; }
  double value() const noexcept { return value_; }

 private:
  ErrorKind kind_;
  double value_;
};

}  // namespace spdada
