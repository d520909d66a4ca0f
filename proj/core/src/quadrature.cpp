#include "tweedie/quadrature.hpp"

#include <algorithm>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "tweedie/error.hpp"

namespace tweedie {

GaussLegendreRule gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "gauss_legendre: n must be >= 1");
  if (!(hi > lo)) throw Error(ErrorCode::InvalidArgument, "gauss_legendre: empty interval");
  GaussLegendreRule rule{std::vector<double>(n), std::vector<double>(n)};
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = mid - half * z;
    rule.nodes[n - 1 - i] = mid + half * z;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

QuadratureResult integrate_adaptive(const ScalarFn& f, double a, double b, double rel_tol,
                                    double abs_tol) {
  if (a == b) return {};
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorCode::InvalidArgument, "integrate_adaptive: interval must be finite");
  }
  if (b < a) {
    auto r = integrate_adaptive(f, b, a, rel_tol, abs_tol);
    return {-r.value, r.error};
  }
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  double error = 0.0;
  double l1 = 0.0;
  double tol = rel_tol;
  if (abs_tol > 0.0) {
    // A single panel estimates the L1 norm; boost's tolerance is relative to it.
    Rule::integrate(f, a, b, 0, rel_tol, &error, &l1);
    if (l1 > 0.0) tol = std::max(rel_tol, abs_tol / l1);
  }
  const double value = Rule::integrate(f, a, b, 20, tol, &error, &l1);
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::QuadratureFailure, "integrate_adaptive: non-finite integral");
  }
  return {value, error * std::max(l1, std::abs(value))};
}

namespace {

// Integrators carry lazily refined tables; one per thread avoids sharing them.
boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule() {
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  return rule;
}

boost::math::quadrature::exp_sinh<double>& exp_sinh_rule() {
  thread_local boost::math::quadrature::exp_sinh<double> rule;
  return rule;
}

QuadratureResult finite_part(const ScalarFn& f, double lo, double hi, double tol) {
  if (!(hi > lo)) return {};
  double error = 0.0;
  const double v = tanh_sinh_rule().integrate(f, lo, hi, tol, &error);
  return {v, error * std::abs(v)};
}

QuadratureResult upper_tail(const ScalarFn& f, double lo, double tol) {
  double error = 0.0;
  const double v = exp_sinh_rule().integrate(f, lo, std::numeric_limits<double>::infinity(),
                                             tol, &error);
  return {v, error * std::abs(v)};
}

QuadratureResult lower_tail(const ScalarFn& f, double hi, double tol) {
  double error = 0.0;
  const double v = exp_sinh_rule().integrate(f, -std::numeric_limits<double>::infinity(), hi,
                                             tol, &error);
  return {v, error * std::abs(v)};
}

}  // namespace

QuadratureResult integrate_interval(const ScalarFn& f, double lo, double hi, double center,
                                    double rel_tol) {
  if (!(hi > lo)) throw Error(ErrorCode::InvalidArgument, "integrate_interval: empty interval");
  const bool lo_inf = std::isinf(lo);
  const bool hi_inf = std::isinf(hi);
  QuadratureResult total;
  auto add = [&total](QuadratureResult r) {
    total.value += r.value;
    total.error += r.error;
  };
  if (!lo_inf && !hi_inf) {
    add(finite_part(f, lo, hi, rel_tol));
  } else if (lo_inf && hi_inf) {
    const double c = std::isfinite(center) ? center : 0.0;
    add(lower_tail(f, c, rel_tol));
    add(upper_tail(f, c, rel_tol));
  } else if (!lo_inf) {
    if (std::isfinite(center) && center > lo) {
      add(finite_part(f, lo, center, rel_tol));
      add(upper_tail(f, center, rel_tol));
    } else {
      add(upper_tail(f, lo, rel_tol));
    }
  } else {
    if (std::isfinite(center) && center < hi) {
      add(lower_tail(f, center, rel_tol));
      add(finite_part(f, center, hi, rel_tol));
    } else {
      add(lower_tail(f, hi, rel_tol));
    }
  }
  if (!std::isfinite(total.value)) {
    throw Error(ErrorCode::QuadratureFailure, "integrate_interval: non-finite integral");
  }
  return total;
}

}  // namespace tweedie
