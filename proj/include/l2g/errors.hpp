#pragma once

#include <stdexcept>
#include <string>

namespace l2g {

enum class ErrorKind {
  DegenerateGrasp,
  ShapeMismatch,
  NonScalarRoot,
  DoubleBackward,
  NeighborhoodTooLarge,
  EmptySet,
  TooManyPoints,
  LengthMismatch,
  EmptyGroundTruth,
  EmptyPredictions,
  InvalidDimensions,
  EmptyView,
  Config,
  Io,
  Runtime,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateGrasp: return "DegenerateGrasp";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonScalarRoot: return "NonScalarRoot";
    case ErrorKind::DoubleBackward: return "DoubleBackward";
    case ErrorKind::NeighborhoodTooLarge: return "NeighborhoodTooLarge";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::TooManyPoints: return "TooManyPoints";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorKind::EmptyPredictions: return "EmptyPredictions";
    case ErrorKind::InvalidDimensions: return "InvalidDimensions";
    case ErrorKind::EmptyView: return "EmptyView";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Runtime: return "Runtime";
  }
  return "Unknown";
}

}  // namespace l2g
