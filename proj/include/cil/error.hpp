#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cil {

enum class ErrorCode {
  DimMismatch,
  NotPositiveDefinite,
  ZeroNorm,
  NonFiniteInput,
  InsufficientData,
  EmptyClass,
  SingleClass,
  NonFiniteLoss,
  InvalidConfig,
  ScheduleClassMissing,
  ZeroFirstAccuracy,
  InvalidPermutation,
  BadMagic,
  TruncatedFile,
  CountMismatch,
  NonFiniteFeature,
  InvalidSpec,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cil
