#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace revision {

enum class ErrorCode {
  SequenceTooShort,
  DimensionMismatch,
  NonFiniteEntry,
  StepOutOfRange,
  RangeOutOfBounds,
  SegmentTooLarge,
  InvalidConfig,
  TooManyFrames,
  PoseDimExceedsMax,
  EmptyBatch,
  EmptyCorpus,
  EmptyMask,
  BoxOutOfBounds,
  NonPositiveDepth,
  DegeneratePart,
  PayloadMismatch,
  UnknownActionTag,
  ExtractionFailed,
  ShapeMismatch,
  TotalTooShort,
  PlanMismatch,
  IoError,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Domain error. The code names the failure the way the CLI reports it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return to_string(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace revision
