#pragma once

#include <stdexcept>
#include <string>

namespace vpmpcc {

enum class ErrorCode {
  TooFewPoints,
  SelfIntersecting,
  DuplicatePoints,
  NonPositiveLimit,
  ParseError,
  NonClosedRaceline,
  SteeringOutOfRange,
  LengthMismatch,
  DimensionMismatch,
  InconsistentDerivatives,
  NonFiniteObjective,
  SingularCovariance,
  MismatchedTracks,
  InvalidArgument,
};

const char* error_code_name(ErrorCode code);

/// Single exception type carrying a machine-checkable code plus a message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vpmpcc
