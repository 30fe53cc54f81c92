#include "psi/error.hpp"
#include "psi/log.hpp"

#include <cstdlib>
#include <memory>
#include <spdlog/sinks/stdout_color_sinks.h>

namespace psi {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotARotation: return "NotARotation";
    case ErrorCode::DegenerateTrajectory: return "DegenerateTrajectory";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::NoCorrespondences: return "NoCorrespondences";
    case ErrorCode::NoValidFrames: return "NoValidFrames";
    case ErrorCode::NotConnected: return "NotConnected";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::OutOfLimits: return "OutOfLimits";
    case ErrorCode::IkUnreachable: return "IkUnreachable";
    case ErrorCode::JointLimit: return "JointLimit";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::StageOrder: return "StageOrder";
    case ErrorCode::Untrained: return "Untrained";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

spdlog::logger& log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("psi");
    l->set_pattern("[%l] %v");
    const char* env = std::getenv("PSI_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
    return l;
  }();
  return *logger;
}

}  // namespace psi
