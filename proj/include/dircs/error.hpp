#pragma once

#include <stdexcept>
#include <string>

namespace dircs {

// Numeric values are part of the C API (see dircs.h) and must stay stable.
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  DimensionMismatch = 2,
  NonBinaryMeasurement = 3,
  LastCoordinateZero = 4,
  DegenerateSignal = 5,
  SimilarityUnsatisfiable = 6,
  InfeasibleAllocation = 7,
  TooFewMeasurements = 8,
  ZeroVector = 9,
  DegenerateLift = 10,
  DegenerateDenominator = 11,
  StepDiverged = 12,
  SingularGram = 13,
  MismatchedNodes = 14,
  PayloadTooLarge = 15,
  BadMagic = 16,
  BadKind = 17,
  FrameIncomplete = 18,
  NodeTimeout = 19,
  RoundMismatch = 20,
  ConfigError = 21,
  IoError = 22,
  TransportError = 23,
};

const char* error_code_name(ErrorCode code) noexcept;

// True for the errors a caller should treat as bad input/configuration rather
// than a numeric failure of the method.
bool is_config_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace dircs
