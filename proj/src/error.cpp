#include "vpmpcc/error.hpp"

namespace vpmpcc {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::SelfIntersecting: return "SelfIntersecting";
    case ErrorCode::DuplicatePoints: return "DuplicatePoints";
    case ErrorCode::NonPositiveLimit: return "NonPositiveLimit";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonClosedRaceline: return "NonClosedRaceline";
    case ErrorCode::SteeringOutOfRange: return "SteeringOutOfRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InconsistentDerivatives: return "InconsistentDerivatives";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::MismatchedTracks: return "MismatchedTracks";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

}  // namespace vpmpcc
