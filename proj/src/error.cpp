#include "dircs/error.hpp"

namespace dircs {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonBinaryMeasurement: return "NonBinaryMeasurement";
    case ErrorCode::LastCoordinateZero: return "LastCoordinateZero";
    case ErrorCode::DegenerateSignal: return "DegenerateSignal";
    case ErrorCode::SimilarityUnsatisfiable: return "SimilarityUnsatisfiable";
    case ErrorCode::InfeasibleAllocation: return "InfeasibleAllocation";
    case ErrorCode::TooFewMeasurements: return "TooFewMeasurements";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DegenerateLift: return "DegenerateLift";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::StepDiverged: return "StepDiverged";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::MismatchedNodes: return "MismatchedNodes";
    case ErrorCode::PayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadKind: return "BadKind";
    case ErrorCode::FrameIncomplete: return "FrameIncomplete";
    case ErrorCode::NodeTimeout: return "NodeTimeout";
    case ErrorCode::RoundMismatch: return "RoundMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::TransportError: return "TransportError";
  }
  return "Unknown";
}

bool is_config_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::NonBinaryMeasurement:
    case ErrorCode::InfeasibleAllocation:
    case ErrorCode::TooFewMeasurements:
    case ErrorCode::MismatchedNodes:
    case ErrorCode::ConfigError:
    case ErrorCode::IoError:
      return true;
    default:
      return false;
  }
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace dircs
