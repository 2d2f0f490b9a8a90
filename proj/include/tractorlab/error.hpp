#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tractorlab {

enum class ErrorKind {
  shape_mismatch,
  domain_error,
  order_exceeded,
  syntax_error,
  unknown_function,
  unbound_variable,
  singular_metric,
  nonpositive_factor,
  scale_mismatch,
  nonpositive_scale,
  step_failure,
  degenerate_normal,
  nonpositive_s,
  obstruction_order,
  order_not_met,
  fit_failure,
  degenerate_jacobian,
  missing_defining_density,
  dimension_too_low,
  grid_too_coarse,
  wrong_dimension,
  missing_euler_characteristic,
  unknown_model,
  bad_parameters,
  not_homogeneous,
  off_cone,
  spec_error,
};

inline std::string_view error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::shape_mismatch: return "ShapeMismatch";
    case ErrorKind::domain_error: return "DomainError";
    case ErrorKind::order_exceeded: return "OrderExceeded";
    case ErrorKind::syntax_error: return "SyntaxError";
    case ErrorKind::unknown_function: return "UnknownFunction";
    case ErrorKind::unbound_variable: return "UnboundVariable";
    case ErrorKind::singular_metric: return "SingularMetric";
    case ErrorKind::nonpositive_factor: return "NonpositiveFactor";
    case ErrorKind::scale_mismatch: return "ScaleMismatch";
    case ErrorKind::nonpositive_scale: return "NonpositiveScale";
    case ErrorKind::step_failure: return "StepFailure";
    case ErrorKind::degenerate_normal: return "DegenerateNormal";
    case ErrorKind::nonpositive_s: return "NonpositiveS";
    case ErrorKind::obstruction_order: return "ObstructionOrder";
    case ErrorKind::order_not_met: return "OrderNotMet";
    case ErrorKind::fit_failure: return "FitFailure";
    case ErrorKind::degenerate_jacobian: return "DegenerateJacobian";
    case ErrorKind::missing_defining_density: return "MissingDefiningDensity";
    case ErrorKind::dimension_too_low: return "DimensionTooLow";
    case ErrorKind::grid_too_coarse: return "GridTooCoarse";
    case ErrorKind::wrong_dimension: return "WrongDimension";
    case ErrorKind::missing_euler_characteristic: return "MissingEulerCharacteristic";
    case ErrorKind::unknown_model: return "UnknownModel";
    case ErrorKind::bad_parameters: return "BadParameters";
    case ErrorKind::not_homogeneous: return "NotHomogeneous";
    case ErrorKind::off_cone: return "OffCone";
    case ErrorKind::spec_error: return "SpecError";
  }
  return "Error";
}

/// Base of every error raised by the library. `kind()` identifies the
/// failure; the concrete type is `KindedError<kind>` so callers may catch
/// either the base or one specific kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class KindedError : public Error {
 public:
  explicit KindedError(const std::string& what) : Error(K, what) {}
};

using ShapeMismatch = KindedError<ErrorKind::shape_mismatch>;
using DomainError = KindedError<ErrorKind::domain_error>;
using OrderExceeded = KindedError<ErrorKind::order_exceeded>;
using UnknownFunction = KindedError<ErrorKind::unknown_function>;
using UnboundVariable = KindedError<ErrorKind::unbound_variable>;
using SingularMetric = KindedError<ErrorKind::singular_metric>;
using NonpositiveFactor = KindedError<ErrorKind::nonpositive_factor>;
using ScaleMismatch = KindedError<ErrorKind::scale_mismatch>;
using NonpositiveScale = KindedError<ErrorKind::nonpositive_scale>;
using StepFailure = KindedError<ErrorKind::step_failure>;
using DegenerateNormal = KindedError<ErrorKind::degenerate_normal>;
using NonpositiveS = KindedError<ErrorKind::nonpositive_s>;
using ObstructionOrder = KindedError<ErrorKind::obstruction_order>;
using OrderNotMet = KindedError<ErrorKind::order_not_met>;
using FitFailure = KindedError<ErrorKind::fit_failure>;
using DegenerateJacobian = KindedError<ErrorKind::degenerate_jacobian>;
using MissingDefiningDensity = KindedError<ErrorKind::missing_defining_density>;
using DimensionTooLow = KindedError<ErrorKind::dimension_too_low>;
using GridTooCoarse = KindedError<ErrorKind::grid_too_coarse>;
using WrongDimension = KindedError<ErrorKind::wrong_dimension>;
using MissingEulerCharacteristic = KindedError<ErrorKind::missing_euler_characteristic>;
using UnknownModel = KindedError<ErrorKind::unknown_model>;
using BadParameters = KindedError<ErrorKind::bad_parameters>;
using NotHomogeneous = KindedError<ErrorKind::not_homogeneous>;
using OffCone = KindedError<ErrorKind::off_cone>;
using SpecError = KindedError<ErrorKind::spec_error>;

/// Parse failures carry the byte offset into the source text.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& message)
      : Error(ErrorKind::syntax_error, "at " + std::to_string(position) + ": " + message),
        position_(position),
        message_(message) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t position_;
  std::string message_;
};

}  // namespace tractorlab
