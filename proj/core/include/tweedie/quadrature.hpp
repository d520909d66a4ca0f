#pragma once

#include <functional>
#include <vector>

namespace tweedie {

using ScalarFn = std::function<double(double)>;

struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped onto [lo, hi].
GaussLegendreRule gauss_legendre(int n, double lo, double hi);

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive Gauss-Kronrod integration of f over the finite interval [a, b]
/// (b < a integrates backwards). Refinement stops once the error estimate is
/// below max(rel_tol * |integral|, abs_tol).
QuadratureResult integrate_adaptive(const ScalarFn& f, double a, double b,
                                    double rel_tol = 1e-12, double abs_tol = 0.0);

/// Integral of f over (lo, hi) where either end may be infinite. Uses
/// double-exponential rules, which tolerate integrable endpoint singularities.
/// `center` is a split point placed near the bulk of the integrand.
QuadratureResult integrate_interval(const ScalarFn& f, double lo, double hi, double center,
                                    double rel_tol = 1e-11);

}  // namespace tweedie
