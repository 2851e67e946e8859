#pragma once

#include <stdexcept>
#include <string>

namespace ewlab {

// Failure conditions surfaced by the library. Each maps to one named
// error in the module contracts; callers can branch on the code.
enum class ErrorCode {
  ZeroVector,
  DimMismatch,
  InsufficientData,
  RankDeficient,
  SingularSystem,
  Diverged,
  ConfigInvalid,
  BandTooNarrow,
  NotInvertible,
  AllRegionsEmpty,
  AllSkipped,
  DegenerateSplit,
  SpecInvalid,
  EmptyRecords,
  IoError,
  ParseError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::BandTooNarrow: return "BandTooNarrow";
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::AllRegionsEmpty: return "AllRegionsEmpty";
    case ErrorCode::AllSkipped: return "AllSkipped";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::EmptyRecords: return "EmptyRecords";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "UnknownError";
}

}  // namespace ewlab
