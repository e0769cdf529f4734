#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gq {

enum class ErrorCode {
  InvalidBitDepth,
  InvalidMu,
  InvalidSchedule,
  InvalidAlpha,
  EmptyInput,
  NonDifferentiablePoint,
  DegenerateTensor,
  InvalidTensor,
  IoError,
  FormatError,
  CorruptFile,
  IndexOverflow,
  CorruptStream,
  ShapeError,
  InvalidTask,
  InvalidConfig,
  TrainingDiverged,
  UsageError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can report it as a machine-readable {code, message} pair.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gq
