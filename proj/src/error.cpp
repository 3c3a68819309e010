#include "sonir/error.hpp"

namespace sonir {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownParam: return "UnknownParam";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::DuplicateEvent: return "DuplicateEvent";
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::BuildFailure: return "BuildFailure";
    case ErrorCode::UnknownParameter: return "UnknownParameter";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::UnknownVowel: return "UnknownVowel";
    case ErrorCode::UnknownBuffer: return "UnknownBuffer";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::DuplicateHeader: return "DuplicateHeader";
    case ErrorCode::NotQuantitative: return "NotQuantitative";
    case ErrorCode::AllEmpty: return "AllEmpty";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
    case ErrorCode::Validation: return "Validation";
  }
  return "Unknown";
}

}  // namespace sonir
