#include "tweedie/error.hpp"

namespace tweedie {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::OutOfSupport: return "OutOfSupport";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::DegeneratePrior: return "DegeneratePrior";
    case ErrorCode::AllWeightsVanished: return "AllWeightsVanished";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::StencilOutOfSupport: return "StencilOutOfSupport";
    case ErrorCode::NearSingularStatistic: return "NearSingularStatistic";
    case ErrorCode::IntervalOutOfSupport: return "IntervalOutOfSupport";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::LowDensity: return "LowDensity";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace tweedie
