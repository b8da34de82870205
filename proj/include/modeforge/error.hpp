#pragma once

#include <stdexcept>
#include <string>

namespace modeforge {

enum class ErrorKind {
  InvalidCoordinate,
  UndefinedSpeed,
  DegenerateTrip,
  EmptyNetwork,
  Parse,
  Dimension,
  Numeric,
  Training,
  Version,
  Config,
  Io,
  InvalidArgument,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidCoordinate: return "invalid-coordinate";
    case ErrorKind::UndefinedSpeed: return "undefined-speed";
    case ErrorKind::DegenerateTrip: return "degenerate-trip";
    case ErrorKind::EmptyNetwork: return "empty-network";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Training: return "training";
    case ErrorKind::Version: return "version";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::InvalidArgument: return "invalid-argument";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Training failure with the epoch at which the loss stopped being finite.
class TrainingError : public Error {
 public:
  TrainingError(std::size_t epoch, const std::string& what)
      : Error(ErrorKind::Training, what), epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace modeforge
