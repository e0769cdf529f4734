#include "gq/error.hpp"

namespace gq {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidBitDepth: return "InvalidBitDepth";
    case ErrorCode::InvalidMu: return "InvalidMu";
    case ErrorCode::InvalidSchedule: return "InvalidSchedule";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonDifferentiablePoint: return "NonDifferentiablePoint";
    case ErrorCode::DegenerateTensor: return "DegenerateTensor";
    case ErrorCode::InvalidTensor: return "InvalidTensor";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::IndexOverflow: return "IndexOverflow";
    case ErrorCode::CorruptStream: return "CorruptStream";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::InvalidTask: return "InvalidTask";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TrainingDiverged: return "TrainingDiverged";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

}  // namespace gq
