#include "w3ar/error.hpp"

namespace w3ar {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::NonFiniteWeight: return "NonFiniteWeight";
    case ErrorCode::RowNotNormalized: return "RowNotNormalized";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::WordCountMismatch: return "WordCountMismatch";
    case ErrorCode::SymbolOutOfRange: return "SymbolOutOfRange";
    case ErrorCode::TargetOutOfRange: return "TargetOutOfRange";
    case ErrorCode::EmptyMap: return "EmptyMap";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::ValidationFailure: return "ValidationFailure";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept { return code != ErrorCode::Io; }

}  // namespace w3ar
