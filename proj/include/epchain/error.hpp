#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace epchain {

enum class ErrorCode {
  NonPositiveN,
  LengthMismatch,
  NonFiniteParameter,
  ImaginaryResidual,
  EigensolverFailure,
  RankAmbiguity,
  NoTransition,
  NegativeOccupancy,
  OverflowRisk,
  UnsortedTimes,
  InvalidBipartition,
  AsymmetricInput,
  OutOfRange,
  FitResidualTooLarge,
  MissingCoefficients,
  DivisionByZeroLog,
  DimensionMismatch,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveN: return "NonPositiveN";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonFiniteParameter: return "NonFiniteParameter";
    case ErrorCode::ImaginaryResidual: return "ImaginaryResidual";
    case ErrorCode::EigensolverFailure: return "EigensolverFailure";
    case ErrorCode::RankAmbiguity: return "RankAmbiguity";
    case ErrorCode::NoTransition: return "NoTransition";
    case ErrorCode::NegativeOccupancy: return "NegativeOccupancy";
    case ErrorCode::OverflowRisk: return "OverflowRisk";
    case ErrorCode::UnsortedTimes: return "UnsortedTimes";
    case ErrorCode::InvalidBipartition: return "InvalidBipartition";
    case ErrorCode::AsymmetricInput: return "AsymmetricInput";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::FitResidualTooLarge: return "FitResidualTooLarge";
    case ErrorCode::MissingCoefficients: return "MissingCoefficients";
    case ErrorCode::DivisionByZeroLog: return "DivisionByZeroLog";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures caused by user input rather than numerics.
  bool is_config_error() const noexcept {
    switch (code_) {
      case ErrorCode::NonPositiveN:
      case ErrorCode::LengthMismatch:
      case ErrorCode::NonFiniteParameter:
      case ErrorCode::NegativeOccupancy:
      case ErrorCode::UnsortedTimes:
      case ErrorCode::InvalidBipartition:
      case ErrorCode::DimensionMismatch:
      case ErrorCode::ConfigError:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

}  // namespace epchain
