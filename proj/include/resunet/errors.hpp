#pragma once

#include <stdexcept>
#include <string>

namespace resunet {

enum class ErrorKind {
  InvalidLabel,
  InvalidIndex,
  ShapeMismatch,
  ShapeError,
  DimMismatch,
  MissingModality,
  MissingLabels,
  CorruptHeader,
  IoError,
  SpecError,
  EmptyBrain,
  DegenerateIntensity,
  TooFewSamples,
  IndexOutOfRange,
  ConfigError,
  NonFiniteLoss,
  ViewMismatch,
  EmptyCohort,
  UsageError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidLabel: return "InvalidLabel";
    case ErrorKind::InvalidIndex: return "InvalidIndex";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::MissingModality: return "MissingModality";
    case ErrorKind::MissingLabels: return "MissingLabels";
    case ErrorKind::CorruptHeader: return "CorruptHeader";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::SpecError: return "SpecError";
    case ErrorKind::EmptyBrain: return "EmptyBrain";
    case ErrorKind::DegenerateIntensity: return "DegenerateIntensity";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::ViewMismatch: return "ViewMismatch";
    case ErrorKind::EmptyCohort: return "EmptyCohort";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable kind alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) fail(kind, msg);
}

}  // namespace resunet
