#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ews {

enum class ErrorCode {
  InvalidArgument,
  // interchange
  MalformedJson,
  SchemaViolation,
  // ports
  LlmUnavailable,
  EmptyCompletion,
  MissingScriptEntry,
  Timeout,
  HttpStatus,
  DecodeError,
  AuthError,
  // index
  EmbedderFailure,
  UnknownChunk,
  DimensionMismatch,
  IoError,
  VersionMismatch,
  CorruptIndex,
  // retrieval
  DuplicateWithinSystem,
  // extraction
  Unparseable,
  AmbiguousMagnitude,
  EmptyPlan,
  ClassifierFailure,
  // evaluation
  MissingColumn,
  BadLabel,
  BadAmount,
  BadPage,
  UnknownProject,
  NonPositiveTotal,
  MissingGold,
  MissingRetrievalTrace,
  InconsistentProjects,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the engine carries a machine-readable code. The
/// message is human-oriented and names the offending item where one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Transport-level HTTP failure; status() is 0 for connection errors.
class HttpError : public Error {
 public:
  HttpError(ErrorCode code, int status, const std::string& message)
      : Error(code, message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// True for failures that originate in an LLM/embedding backend rather than
/// in the engine's own data handling.
bool is_backend_failure(ErrorCode code) noexcept;

}  // namespace ews
