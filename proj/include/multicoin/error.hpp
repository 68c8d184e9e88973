#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace multicoin {

enum class ErrorCode {
  BadParams,
  BadMagic,
  BadHeader,
  TruncatedPayload,
  TrailingData,
  NonFiniteValue,
  UnsupportedColorPfm,
  UnsupportedBitDepth,
  CorruptStream,
  OutOfBounds,
  DimensionMismatch,
  LengthMismatch,
  NoMotion,
  NoMatches,
  MissingFlowSample,
  MissingDepthSample,
  EmptyInput,
  NonPositiveDepth,
  AmbiguousColor,
  StaticAnchor,
  AnchorMismatch,
  TimeOutOfRange,
  SlotCollision,
  MissingEndpoints,
  IndivisibleDims,
  ShapeMismatch,
  EmptyPolyline,
  TooSmall,
  SchemaViolation,
  NotFound,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::TrailingData: return "TrailingData";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::UnsupportedColorPfm: return "UnsupportedColorPfm";
    case ErrorCode::UnsupportedBitDepth: return "UnsupportedBitDepth";
    case ErrorCode::CorruptStream: return "CorruptStream";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoMotion: return "NoMotion";
    case ErrorCode::NoMatches: return "NoMatches";
    case ErrorCode::MissingFlowSample: return "MissingFlowSample";
    case ErrorCode::MissingDepthSample: return "MissingDepthSample";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::AmbiguousColor: return "AmbiguousColor";
    case ErrorCode::StaticAnchor: return "StaticAnchor";
    case ErrorCode::AnchorMismatch: return "AnchorMismatch";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::SlotCollision: return "SlotCollision";
    case ErrorCode::MissingEndpoints: return "MissingEndpoints";
    case ErrorCode::IndivisibleDims: return "IndivisibleDims";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyPolyline: return "EmptyPolyline";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every data-level failure in the library is reported through this type.
/// The code is stable and machine-readable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace multicoin
