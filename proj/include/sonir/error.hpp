#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sonir {

enum class ErrorCode {
  UnknownParam,
  CycleDetected,
  DuplicateEvent,
  InvalidGraph,
  InvalidArgument,
  OutOfRange,
  BuildFailure,
  UnknownParameter,
  KindMismatch,
  UnknownVowel,
  UnknownBuffer,
  EmptyInput,
  RaggedRow,
  DuplicateHeader,
  NotQuantitative,
  AllEmpty,
  ParseError,
  Io,
  Format,
  Validation,
};

std::string_view to_string(ErrorCode code);

/// Every engine failure carries a code so callers (CLI exit codes, HTTP
/// status mapping, tests) can branch without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace sonir
