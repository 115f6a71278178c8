#include "revision/error.hpp"

namespace revision {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SequenceTooShort: return "SequenceTooShort";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::StepOutOfRange: return "StepOutOfRange";
    case ErrorCode::RangeOutOfBounds: return "RangeOutOfBounds";
    case ErrorCode::SegmentTooLarge: return "SegmentTooLarge";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TooManyFrames: return "TooManyFrames";
    case ErrorCode::PoseDimExceedsMax: return "PoseDimExceedsMax";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::BoxOutOfBounds: return "BoxOutOfBounds";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::DegeneratePart: return "DegeneratePart";
    case ErrorCode::PayloadMismatch: return "PayloadMismatch";
    case ErrorCode::UnknownActionTag: return "UnknownActionTag";
    case ErrorCode::ExtractionFailed: return "ExtractionFailed";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TotalTooShort: return "TotalTooShort";
    case ErrorCode::PlanMismatch: return "PlanMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace revision
