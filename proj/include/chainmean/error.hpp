#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chainmean {

enum class ErrorCode {
  EmptySample,
  BadConfidence,
  EtaTooLarge,
  SampleTooSmall,
  UnknownIdentifier,
  ConfidenceOutOfRange,
  ScheduleMismatch,
  NotLinearClass,
  NotPSD,
  ZeroDiameter,
  NotInCone,
  ZeroVector,
  NotSquare,
  BadNu,
  BadAlpha,
  TrueMeanUnavailable,
  IoError,
  InvalidArgument,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace chainmean
