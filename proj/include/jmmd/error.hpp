#pragma once

#include <stdexcept>
#include <string>

namespace jmmd {

enum class ErrorCode {
  SingularDesign,
  NonConvergence,
  DomainError,
  DegenerateResponse,
  PenaltyOverflow,
  NegativeImprovement,
  UnknownParent,
  DispersionOutOfRange,
  IterationCap,
  ParseError,
  MissingColumn,
  NonNumericCell,
  EmptyFile,
  IoError,
  InvalidArgument,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DegenerateResponse: return "DegenerateResponse";
    case ErrorCode::PenaltyOverflow: return "PenaltyOverflow";
    case ErrorCode::NegativeImprovement: return "NegativeImprovement";
    case ErrorCode::UnknownParent: return "UnknownParent";
    case ErrorCode::DispersionOutOfRange: return "DispersionOutOfRange";
    case ErrorCode::IterationCap: return "IterationCap";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures of the numerical machinery, as opposed to bad input.
  bool is_numerical() const noexcept {
    switch (code_) {
      case ErrorCode::SingularDesign:
      case ErrorCode::NonConvergence:
      case ErrorCode::DomainError:
      case ErrorCode::DegenerateResponse:
      case ErrorCode::PenaltyOverflow:
      case ErrorCode::NegativeImprovement:
      case ErrorCode::DispersionOutOfRange:
      case ErrorCode::IterationCap:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

}  // namespace jmmd
