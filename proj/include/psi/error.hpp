#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace psi {

enum class ErrorCode {
  InvalidArgument,
  NotARotation,
  DegenerateTrajectory,
  TooFewPoints,
  EmptyCloud,
  MalformedHeader,
  TruncatedPayload,
  InsufficientPoints,
  NoCorrespondences,
  NoValidFrames,
  NotConnected,
  Diverged,
  OutOfLimits,
  IkUnreachable,
  JointLimit,
  MissingField,
  EmptyCandidates,
  EmptyDataset,
  StageOrder,
  Untrained,
  DegenerateGeometry,
  LengthMismatch,
  Io,
  Parse,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace psi
