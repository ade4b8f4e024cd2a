#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace graspcov {

enum class ErrorCode {
  FileNotFound,
  ParseError,
  EmptyMesh,
  InvalidStep,
  InvalidK,
  InvalidArgument,
  EmptyInput,
  EmptyReference,
  NoValidSamples,
  MissingRobustness,
  EmptyRobustSet,
  BudgetExceeded,
  ConfigError,
  ReferenceMismatch,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::InvalidStep: return "InvalidStep";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::NoValidSamples: return "NoValidSamples";
    case ErrorCode::MissingRobustness: return "MissingRobustness";
    case ErrorCode::EmptyRobustSet: return "EmptyRobustSet";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ReferenceMismatch: return "ReferenceMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception type thrown by every graspcov operation. The code identifies the
/// failure class; what() carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace graspcov
