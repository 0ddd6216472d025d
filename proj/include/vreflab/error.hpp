#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vreflab {

enum class ErrorCode {
  InvalidArgument,
  NonPhysicalResistance,
  NonPositiveCurrent,
  InversionOutOfDomain,
  NonPhysicalSizing,
  NegativeEffectiveGain,
  NonPhysicalOperatingPoint,
  BracketInvalid,
  MaxIterationsExceeded,
  SolverDivergence,
  DegenerateRange,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPhysicalResistance: return "NonPhysicalResistance";
    case ErrorCode::NonPositiveCurrent: return "NonPositiveCurrent";
    case ErrorCode::InversionOutOfDomain: return "InversionOutOfDomain";
    case ErrorCode::NonPhysicalSizing: return "NonPhysicalSizing";
    case ErrorCode::NegativeEffectiveGain: return "NegativeEffectiveGain";
    case ErrorCode::NonPhysicalOperatingPoint: return "NonPhysicalOperatingPoint";
    case ErrorCode::BracketInvalid: return "BracketInvalid";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::SolverDivergence: return "SolverDivergence";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The code lets
/// callers (sweeps, Monte Carlo, the CLI) classify failures without parsing
/// messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the error-code prefix.
  const std::string& detail() const noexcept { return detail_; }

  /// True for failures of the numerical model (as opposed to bad input).
  bool is_numerical() const noexcept {
    switch (code_) {
      case ErrorCode::InvalidArgument:
      case ErrorCode::ConfigError:
        return false;
      default:
        return true;
    }
  }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace vreflab
