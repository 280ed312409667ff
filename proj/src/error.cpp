#include "chainmean/error.hpp"

namespace chainmean {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::BadConfidence: return "BadConfidence";
    case ErrorCode::EtaTooLarge: return "EtaTooLarge";
    case ErrorCode::SampleTooSmall: return "SampleTooSmall";
    case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorCode::ConfidenceOutOfRange: return "ConfidenceOutOfRange";
    case ErrorCode::ScheduleMismatch: return "ScheduleMismatch";
    case ErrorCode::NotLinearClass: return "NotLinearClass";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::ZeroDiameter: return "ZeroDiameter";
    case ErrorCode::NotInCone: return "NotInCone";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::BadNu: return "BadNu";
    case ErrorCode::BadAlpha: return "BadAlpha";
    case ErrorCode::TrueMeanUnavailable: return "TrueMeanUnavailable";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace chainmean
