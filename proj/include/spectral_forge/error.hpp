#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sforge {

/// Error families surfaced by the toolkit. The numeric values are part of the
/// C ABI (see spectral_forge.h) and must not be reordered.
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  MissingFile = 2,
  HeaderMismatch = 3,
  UnknownClassId = 4,
  IoError = 5,
  NonFiniteValue = 6,
  DimensionMismatch = 7,
  DegenerateReference = 8,
  MissingWavelengths = 9,
  EmptyBand = 10,
  BatchTooSmall = 11,
  EmptyBackgroundPool = 12,
  TargetAbsent = 13,
  InsufficientBackground = 14,
  EmptyInput = 15,
  ClassMismatch = 16,
  LengthMismatch = 17,
  AlgorithmSetMismatch = 18,
  DivergenceDetected = 19,
  ChannelMismatch = 20,
  SplitOverlap = 21,
  Internal = 99,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace sforge
