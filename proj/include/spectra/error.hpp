#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spectra {

/// Machine-checkable failure categories raised by the toolkit.
enum class ErrorCode {
  DimensionMismatch,
  NonFiniteValue,
  InvalidSpacing,
  NotDivisible,
  ChannelOutOfRange,
  TooFewBins,
  GridMismatch,
  FairEstimatorNeedsTwoMembers,
  EmptyEnsemble,
  InvalidConfig,
  EvenKernel,
  ChannelMismatch,
  ShapeMismatch,
  EmptyDataset,
  DivergenceDetected,
  FormatError,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace spectra
