#pragma once

#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "tweedie/linalg.hpp"
#include "tweedie/model.hpp"
#include "tweedie/quadrature.hpp"

namespace tweedie {

enum class FdScheme { Central2, Central4, Richardson };

enum class StepRule {
  /// h = h0^(1/(r+2)) * max(1, |y|) for an order-r derivative.
  Scaled,
  /// h = h0 for every order.
  Fixed,
};

std::string_view to_string(FdScheme scheme) noexcept;
FdScheme parse_fd_scheme(std::string_view text);
std::string_view to_string(StepRule rule) noexcept;
StepRule parse_step_rule(std::string_view text);

struct FdPolicy {
  FdScheme scheme = FdScheme::Richardson;
  double base_step = 1e-6;
  StepRule step_rule = StepRule::Scaled;
  /// Points with |T'| at or below this value are treated as singular.
  double sing_margin = 1e-4;
  /// Largest factor by which a step may be shrunk to keep a stencil inside
  /// the domain before StencilOutOfSupport is raised.
  double max_shrink = 8.0;

  double step_for_order(int order, double y) const;
  /// Throws InvalidArgument on a non-positive step or negative margin.
  void validate() const;
};

struct FdResult {
  double value = 0.0;
  /// Richardson discrepancy plus a rounding term; NaN for plain schemes.
  double error = std::numeric_limits<double>::quiet_NaN();
};

/// Open interval the stencil must stay inside, with clearance `margin`.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double margin = 0.0;
};

/// Support of a scalar model as an Interval.
Interval domain_of(const ExpFamModel& model);

/// Weights of the `order`-th derivative at x0 for the given nodes.
std::vector<double> fornberg_weights(double x0, const std::vector<double>& nodes, int order);

/// Integer offsets of the central stencil used for an order-r derivative
/// with accuracy 2 (Central2) or 4 (Central4, Richardson).
std::vector<int> central_offsets(int order, FdScheme scheme);

FdResult fd_derivative(const ScalarFn& f, double y, int order, const FdPolicy& policy,
                       const Interval& domain = {});

using DomainFn = std::function<bool(const Vector&)>;

/// k x m matrix whose column j is the gradient of f_j (gradient layout:
/// entry (i, j) = d f_j / d y_i). `errors` receives the Richardson estimates.
Matrix jacobian_fd(const VectorFn& f, const Vector& y, const FdPolicy& policy,
                   const DomainFn& inside = {}, Matrix* errors = nullptr);

/// Hessian of a scalar function by nested central differences.
Matrix hessian_fd(const std::function<double(const Vector&)>& f, const Vector& x,
                  const FdPolicy& policy, const DomainFn& inside = {});

/// (1/T'(y) d/dy) applied `ell` times to f. Linear statistics reduce to
/// (1/T')^ell times the plain derivative; otherwise first-derivative stencils
/// are nested with the step halved per level.
FdResult d_operator(const ScalarFn& f, const ExpFamModel& model, int ell, double y,
                    const FdPolicy& policy);

/// Integral of T'(u) g(u) over [a, y]; error estimate at most 1e-9 relative.
double antiderivative_weighted(const ScalarFn& g, double a, double y, const ExpFamModel& model);

/// Truncated Taylor expansion around a point, stored as normalized
/// coefficients c_k = f^(k)(y0) / k!.
class Jet {
 public:
  Jet() = default;
  explicit Jet(std::vector<double> coefficients) : c_(std::move(coefficients)) {}

  static Jet from_derivatives(const std::vector<double>& derivatives);
  static Jet constant(double value, int order);

  int order() const { return static_cast<int>(c_.size()) - 1; }
  double value() const { return c_.at(0); }
  double derivative(int k) const;
  const std::vector<double>& coefficients() const { return c_; }

  Jet operator+(const Jet& other) const;
  Jet operator*(const Jet& other) const;
  Jet operator*(double s) const;
  Jet reciprocal() const;
  Jet exp() const;
  /// Jet of f' (one order lower).
  Jet differentiate() const;
  Jet truncated(int order) const;

 private:
  std::vector<double> c_;
};

}  // namespace tweedie
