#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tweedie {

/// Failure categories surfaced by the library. Each maps onto one of the
/// documented error conditions of the public operations.
enum class ErrorCode {
  OutOfSupport,
  NotSymmetric,
  DegeneratePrior,
  AllWeightsVanished,
  Overflow,
  SingularJacobian,
  StencilOutOfSupport,
  NearSingularStatistic,
  IntervalOutOfSupport,
  QuadratureFailure,
  ShapeMismatch,
  DegenerateSample,
  LowDensity,
  InvalidArgument,
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tweedie
