#include "ewstrack/errors.hpp"

namespace ews {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::LlmUnavailable: return "LlmUnavailable";
    case ErrorCode::EmptyCompletion: return "EmptyCompletion";
    case ErrorCode::MissingScriptEntry: return "MissingScriptEntry";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::HttpStatus: return "HttpStatus";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::EmbedderFailure: return "EmbedderFailure";
    case ErrorCode::UnknownChunk: return "UnknownChunk";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptIndex: return "CorruptIndex";
    case ErrorCode::DuplicateWithinSystem: return "DuplicateWithinSystem";
    case ErrorCode::Unparseable: return "Unparseable";
    case ErrorCode::AmbiguousMagnitude: return "AmbiguousMagnitude";
    case ErrorCode::EmptyPlan: return "EmptyPlan";
    case ErrorCode::ClassifierFailure: return "ClassifierFailure";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::BadAmount: return "BadAmount";
    case ErrorCode::BadPage: return "BadPage";
    case ErrorCode::UnknownProject: return "UnknownProject";
    case ErrorCode::NonPositiveTotal: return "NonPositiveTotal";
    case ErrorCode::MissingGold: return "MissingGold";
    case ErrorCode::MissingRetrievalTrace: return "MissingRetrievalTrace";
    case ErrorCode::InconsistentProjects: return "InconsistentProjects";
  }
  return "Unknown";
}

bool is_backend_failure(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::LlmUnavailable:
    case ErrorCode::Timeout:
    case ErrorCode::HttpStatus:
    case ErrorCode::AuthError:
    case ErrorCode::DecodeError:
    case ErrorCode::EmptyCompletion:
      return true;
    default:
      return false;
  }
}

}  // namespace ews
