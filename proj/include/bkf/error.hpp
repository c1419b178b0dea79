#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bkf {

enum class ErrorCode {
  NotPositiveDefinite,
  DimensionMismatch,
  EmptyInterval,
  InvalidParameter,
  RegularizationFailed,
  DegenerateColumn,
  NonFiniteInput,
  SingularGram,
  EmptyTrace,
  IndexOutOfRange,
  InvalidAlpha,
  InvalidSpec,
  FileNotFound,
  ParseError,
  InvalidFlag,
};

std::string_view to_string(ErrorCode code) noexcept;

// Broad category used for process exit codes.
enum class ErrorCategory { Usage, Data, Numerical };

ErrorCategory category_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInterval: return "EmptyInterval";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::RegularizationFailed: return "RegularizationFailed";
    case ErrorCode::DegenerateColumn: return "DegenerateColumn";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::EmptyTrace: return "EmptyTrace";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidFlag: return "InvalidFlag";
  }
  return "Unknown";
}

inline ErrorCategory category_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidFlag:
    case ErrorCode::InvalidAlpha:
      return ErrorCategory::Usage;
    case ErrorCode::FileNotFound:
    case ErrorCode::ParseError:
    case ErrorCode::InvalidSpec:
    case ErrorCode::NonFiniteInput:
    case ErrorCode::DegenerateColumn:
    case ErrorCode::EmptyTrace:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::DimensionMismatch:
      return ErrorCategory::Data;
    default:
      return ErrorCategory::Numerical;
  }
}

}  // namespace bkf
