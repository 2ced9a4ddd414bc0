#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace w3ar {

enum class ErrorCode {
  // attention validation
  EmptyMatrix,
  NegativeWeight,
  NonFiniteWeight,
  RowNotNormalized,
  // shape and indexing
  LengthMismatch,
  ShapeMismatch,
  GroupTooSmall,
  WordCountMismatch,
  SymbolOutOfRange,
  TargetOutOfRange,
  EmptyMap,
  InvalidArgument,
  // file formats
  BadMagic,
  UnsupportedVersion,
  TruncatedPayload,
  ValidationFailure,
  SchemaViolation,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for the codes that mean "the input was malformed" as opposed to an
/// IO failure. The CLI maps these to exit code 2.
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace w3ar
