#include "tweedie/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tweedie/error.hpp"

namespace tweedie {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kRoundingFactor = 8.0;

}  // namespace

std::string_view to_string(FdScheme scheme) noexcept {
  switch (scheme) {
    case FdScheme::Central2: return "central-2";
    case FdScheme::Central4: return "central-4";
    case FdScheme::Richardson: return "richardson";
  }
  return "unknown";
}

FdScheme parse_fd_scheme(std::string_view text) {
  if (text == "central-2" || text == "central2") return FdScheme::Central2;
  if (text == "central-4" || text == "central4") return FdScheme::Central4;
  if (text == "richardson") return FdScheme::Richardson;
  throw Error(ErrorCode::InvalidArgument,
              "unknown fd scheme '" + std::string(text) + "' (central-2 | central-4 | richardson)");
}

std::string_view to_string(StepRule rule) noexcept {
  return rule == StepRule::Scaled ? "scaled" : "fixed";
}

StepRule parse_step_rule(std::string_view text) {
  if (text == "scaled") return StepRule::Scaled;
  if (text == "fixed") return StepRule::Fixed;
  throw Error(ErrorCode::InvalidArgument,
              "unknown step rule '" + std::string(text) + "' (scaled | fixed)");
}

double FdPolicy::step_for_order(int order, double y) const {
  if (step_rule == StepRule::Fixed) return base_step;
  return std::pow(base_step, 1.0 / (order + 2)) * std::max(1.0, std::abs(y));
}

void FdPolicy::validate() const {
  if (!(base_step > 0.0) || !std::isfinite(base_step)) {
    throw Error(ErrorCode::InvalidArgument, "fd policy: base step must be finite and > 0");
  }
  if (!(sing_margin >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "fd policy: singularity margin must be >= 0");
  }
  if (!(max_shrink >= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "fd policy: max_shrink must be >= 1");
  }
}

Interval domain_of(const ExpFamModel& model) {
  const auto [lo, hi] = model.support().bounds_1d();
  return {lo, hi, model.support_margin()};
}

// ---------------------------------------------------------------------------
// Stencils

std::vector<double> fornberg_weights(double x0, const std::vector<double>& nodes, int order) {
  const int n = static_cast<int>(nodes.size());
  if (order < 0 || order >= n) {
    throw Error(ErrorCode::InvalidArgument, "fornberg_weights: need more nodes than the order");
  }
  // c[j][k]: weight of node j for the k-th derivative
  std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j) w[j] = c[j][order];
  return w;
}

std::vector<int> central_offsets(int order, FdScheme scheme) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "central_offsets: order must be >= 1");
  const int accuracy = scheme == FdScheme::Central2 ? 2 : 4;
  const int half = (order - 1) / 2 + accuracy / 2;
  std::vector<int> offsets;
  for (int k = -half; k <= half; ++k) offsets.push_back(k);
  return offsets;
}

namespace {

struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;
  int half = 0;
};

Stencil make_stencil(int order, FdScheme scheme) {
  Stencil s;
  s.offsets = central_offsets(order, scheme);
  std::vector<double> nodes(s.offsets.begin(), s.offsets.end());
  s.weights = fornberg_weights(0.0, nodes, order);
  // exact zeros for symmetric stencils (the centre of odd orders)
  for (double& w : s.weights) {
    if (std::abs(w) < 1e-13) w = 0.0;
  }
  s.half = s.offsets.back();
  return s;
}

const Stencil& cached_stencil(int order, FdScheme scheme) {
  constexpr int kMaxCached = 12;
  static const auto table = [] {
    std::vector<std::vector<Stencil>> t(2);
    for (int acc = 0; acc < 2; ++acc) {
      for (int r = 1; r <= kMaxCached; ++r) {
        t[acc].push_back(make_stencil(r, acc == 0 ? FdScheme::Central2 : FdScheme::Central4));
      }
    }
    return t;
  }();
  if (order < 1 || order > kMaxCached) {
    throw Error(ErrorCode::InvalidArgument,
                "finite-difference order " + std::to_string(order) + " outside [1, 12]");
  }
  return table[scheme == FdScheme::Central2 ? 0 : 1][order - 1];
}

// Largest step <= h whose stencil of half-width reach_per_h * step stays in
// the domain; throws when that requires shrinking by more than max_shrink.
double fit_step(double y, double reach_per_h, double h, const Interval& d, const FdPolicy& policy) {
  if (!(y - d.lo > d.margin && d.hi - y > d.margin)) {
    std::ostringstream os;
    os << "evaluation point " << y << " outside (" << d.lo << ", " << d.hi << ")";
    throw Error(ErrorCode::StencilOutOfSupport, os.str());
  }
  const double room = std::min(y - d.lo, d.hi - y) - d.margin;
  if (reach_per_h * h < room) return h;
  // reach only halfway to the boundary: many integrands are singular there
  const double fitted = 0.5 * room / reach_per_h;
  if (fitted * policy.max_shrink < h) {
    std::ostringstream os;
    os << "stencil of half-width " << reach_per_h * h << " around " << y << " leaves ("
       << d.lo << ", " << d.hi << ")";
    throw Error(ErrorCode::StencilOutOfSupport, os.str());
  }
  return fitted;
}

struct Raw {
  double value = 0.0;
  double magnitude = 0.0;  // sum |w f| / h^r, drives the rounding estimate
};

Raw apply_stencil(const ScalarFn& f, double y, int order, double h, const Stencil& s) {
  Raw r;
  for (std::size_t i = 0; i < s.offsets.size(); ++i) {
    if (s.weights[i] == 0.0) continue;
    const double fv = f(y + s.offsets[i] * h);
    r.value += s.weights[i] * fv;
    r.magnitude += std::abs(s.weights[i] * fv);
  }
  const double scale = std::pow(h, order);
  r.value /= scale;
  r.magnitude /= scale;
  return r;
}

FdResult richardson_combine(const Raw& coarse, const Raw& fine) {
  const double delta = fine.value - coarse.value;
  return {fine.value + delta / 15.0,
          std::abs(delta) / 15.0 + kRoundingFactor * kEps * fine.magnitude};
}

}  // namespace

FdResult fd_derivative(const ScalarFn& f, double y, int order, const FdPolicy& policy,
                       const Interval& domain) {
  policy.validate();
  if (order == 0) return {f(y), 0.0};
  const Stencil& s = cached_stencil(order, policy.scheme);
  const double h = fit_step(y, s.half, policy.step_for_order(order, y), domain, policy);
  if (policy.scheme != FdScheme::Richardson) return {apply_stencil(f, y, order, h, s).value};
  return richardson_combine(apply_stencil(f, y, order, h, s),
                            apply_stencil(f, y, order, 0.5 * h, s));
}

// ---------------------------------------------------------------------------
// Jacobians

namespace {

Matrix jacobian_at_step(const VectorFn& f, const Vector& y, const Vector& steps, const Stencil& s) {
  Matrix jac;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    Vector acc;
    for (std::size_t k = 0; k < s.offsets.size(); ++k) {
      if (s.weights[k] == 0.0) continue;
      Vector p = y;
      p(i) += s.offsets[k] * steps(i);
      const Vector v = f(p);
      if (acc.size() == 0) acc = Vector::Zero(v.size());
      acc += s.weights[k] * v;
    }
    acc /= steps(i);
    if (jac.size() == 0) jac.resize(y.size(), acc.size());
    jac.row(i) = acc.transpose();
  }
  return jac;
}

}  // namespace

Matrix jacobian_fd(const VectorFn& f, const Vector& y, const FdPolicy& policy,
                   const DomainFn& inside, Matrix* errors) {
  policy.validate();
  if (y.size() == 0) throw Error(ErrorCode::ShapeMismatch, "jacobian_fd: empty point");
  const Stencil& s = cached_stencil(1, policy.scheme);
  Vector steps(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double h = policy.step_for_order(1, y(i));
    const double floor = h / policy.max_shrink;
    auto fits = [&](double hh) {
      if (!inside) return true;
      for (int k : s.offsets) {
        Vector p = y;
        p(i) += k * hh;
        if (!inside(p)) return false;
      }
      return true;
    };
    while (!fits(h)) {
      h *= 0.5;
      if (h < floor) {
        std::ostringstream os;
        os << "jacobian_fd: stencil along coordinate " << i << " leaves the domain at ["
           << y.transpose() << "]";
        throw Error(ErrorCode::StencilOutOfSupport, os.str());
      }
    }
    steps(i) = h;
  }
  if (policy.scheme != FdScheme::Richardson) {
    Matrix jac = jacobian_at_step(f, y, steps, s);
    if (errors) *errors = Matrix::Constant(jac.rows(), jac.cols(), std::numeric_limits<double>::quiet_NaN());
    return jac;
  }
  const Matrix coarse = jacobian_at_step(f, y, steps, s);
  const Matrix fine = jacobian_at_step(f, y, 0.5 * steps, s);
  const Matrix delta = fine - coarse;
  if (errors) *errors = delta.cwiseAbs() / 15.0;
  return fine + delta / 15.0;
}

Matrix hessian_fd(const std::function<double(const Vector&)>& f, const Vector& x,
                  const FdPolicy& policy, const DomainFn& inside) {
  FdPolicy inner = policy;
  // inner stencils run at half the outer step
  inner.base_step = policy.step_rule == StepRule::Scaled ? policy.base_step / 8.0
                                                          : policy.base_step / 2.0;
  auto gradient = [&](const Vector& p) -> Vector {
    return jacobian_fd([&](const Vector& q) { return Vector::Constant(1, f(q)); }, p, inner, inside)
        .col(0);
  };
  const Matrix h = jacobian_fd(gradient, x, policy, inside);
  return 0.5 * (h + h.transpose());
}

// ---------------------------------------------------------------------------
// D-operator

namespace {

double checked_stat_prime(const ExpFamModel& model, double y, double sing_margin) {
  const double tp = model.stat_prime(y);
  if (!(std::abs(tp) > sing_margin)) {
    std::ostringstream os;
    os << "|T'(" << y << ")| = " << std::abs(tp) << " is within the singularity margin "
       << sing_margin;
    throw Error(ErrorCode::NearSingularStatistic, os.str());
  }
  return tp;
}

// (1/T' d/dy)^level f at y with first-derivative stencils of step h, h/2, ...
Raw nested_d(const ScalarFn& f, const ExpFamModel& model, int level, double y, double h,
             const Stencil& s, double sing_margin) {
  if (level == 0) {
    const double v = f(y);
    return {v, std::abs(v)};
  }
  const double tp = checked_stat_prime(model, y, sing_margin);
  Raw r;
  for (std::size_t i = 0; i < s.offsets.size(); ++i) {
    if (s.weights[i] == 0.0) continue;
    const Raw inner = nested_d(f, model, level - 1, y + s.offsets[i] * h, 0.5 * h, s, sing_margin);
    r.value += s.weights[i] * inner.value;
    r.magnitude += std::abs(s.weights[i]) * inner.magnitude;
  }
  const double scale = h * std::abs(tp);
  r.value /= h * tp;
  r.magnitude /= scale;
  return r;
}

}  // namespace

FdResult d_operator(const ScalarFn& f, const ExpFamModel& model, int ell, double y,
                    const FdPolicy& policy) {
  policy.validate();
  if (ell < 0 || ell > 5) {
    throw Error(ErrorCode::InvalidArgument, "d_operator: order must be in [0, 5]");
  }
  if (ell == 0) return {f(y), 0.0};
  if (!model.is_scalar() || model.max_derivative_order() < 1) {
    throw Error(ErrorCode::ShapeMismatch, "d_operator requires a scalar model with T' available");
  }
  const Interval domain = domain_of(model);
  const double tp = checked_stat_prime(model, y, policy.sing_margin);
  if (model.linear_statistic()) {
    const FdResult r = fd_derivative(f, y, ell, policy, domain);
    const double scale = std::pow(1.0 / tp, ell);
    return {r.value * scale, r.error * std::abs(scale)};
  }
  const Stencil& s = cached_stencil(1, policy.scheme);
  const double reach_per_h = s.half * (2.0 - std::pow(2.0, 1 - ell));
  const double h = fit_step(y, reach_per_h, policy.step_for_order(ell, y), domain, policy);
  if (policy.scheme != FdScheme::Richardson) {
    return {nested_d(f, model, ell, y, h, s, policy.sing_margin).value};
  }
  return richardson_combine(nested_d(f, model, ell, y, h, s, policy.sing_margin),
                            nested_d(f, model, ell, y, 0.5 * h, s, policy.sing_margin));
}

double antiderivative_weighted(const ScalarFn& g, double a, double y, const ExpFamModel& model) {
  if (!model.is_scalar() || model.max_derivative_order() < 1) {
    throw Error(ErrorCode::ShapeMismatch,
                "antiderivative_weighted requires a scalar model with T' available");
  }
  if (a == y) return 0.0;
  const Interval d = domain_of(model);
  const double lo = std::min(a, y);
  const double hi = std::max(a, y);
  if (!(lo - d.lo > d.margin && d.hi - hi > d.margin)) {
    std::ostringstream os;
    os << "integration interval [" << lo << ", " << hi << "] not inside the support";
    throw Error(ErrorCode::IntervalOutOfSupport, os.str());
  }
  const auto r = integrate_adaptive([&](double u) { return model.stat_prime(u) * g(u); }, a, y,
                                    1e-13, 1e-15);
  if (r.error > 1e-9 * std::max(1.0, std::abs(r.value))) {
    std::ostringstream os;
    os << "weighted antiderivative on [" << lo << ", " << hi << "] has error estimate "
       << r.error;
    throw Error(ErrorCode::QuadratureFailure, os.str());
  }
  return r.value;
}

// ---------------------------------------------------------------------------
// Jet

Jet Jet::from_derivatives(const std::vector<double>& derivatives) {
  std::vector<double> c(derivatives.size());
  double factorial = 1.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k > 0) factorial *= static_cast<double>(k);
    c[k] = derivatives[k] / factorial;
  }
  return Jet(std::move(c));
}

Jet Jet::constant(double value, int order) {
  std::vector<double> c(order + 1, 0.0);
  c[0] = value;
  return Jet(std::move(c));
}

double Jet::derivative(int k) const {
  double factorial = 1.0;
  for (int i = 2; i <= k; ++i) factorial *= i;
  return c_.at(k) * factorial;
}

Jet Jet::truncated(int order) const {
  return Jet(std::vector<double>(c_.begin(), c_.begin() + std::min<int>(order + 1, c_.size())));
}

Jet Jet::operator+(const Jet& other) const {
  const std::size_t n = std::min(c_.size(), other.c_.size());
  std::vector<double> c(n);
  for (std::size_t k = 0; k < n; ++k) c[k] = c_[k] + other.c_[k];
  return Jet(std::move(c));
}

Jet Jet::operator*(const Jet& other) const {
  const std::size_t n = std::min(c_.size(), other.c_.size());
  std::vector<double> c(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j <= k; ++j) c[k] += c_[j] * other.c_[k - j];
  }
  return Jet(std::move(c));
}

Jet Jet::operator*(double s) const {
  std::vector<double> c = c_;
  for (double& v : c) v *= s;
  return Jet(std::move(c));
}

Jet Jet::reciprocal() const {
  if (c_.at(0) == 0.0) throw Error(ErrorCode::InvalidArgument, "Jet::reciprocal of zero");
  std::vector<double> b(c_.size(), 0.0);
  b[0] = 1.0 / c_[0];
  for (std::size_t k = 1; k < c_.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += c_[j] * b[k - j];
    b[k] = -s / c_[0];
  }
  return Jet(std::move(b));
}

Jet Jet::exp() const {
  std::vector<double> b(c_.size(), 0.0);
  b[0] = std::exp(c_.at(0));
  for (std::size_t k = 1; k < c_.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * c_[j] * b[k - j];
    b[k] = s / static_cast<double>(k);
  }
  return Jet(std::move(b));
}

Jet Jet::differentiate() const {
  if (c_.size() < 2) throw Error(ErrorCode::InvalidArgument, "Jet::differentiate of order-0 jet");
  std::vector<double> c(c_.size() - 1);
  for (std::size_t k = 0; k + 1 < c_.size(); ++k) c[k] = static_cast<double>(k + 1) * c_[k + 1];
  return Jet(std::move(c));
}

}  // namespace tweedie
