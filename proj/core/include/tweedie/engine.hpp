#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tweedie/calculus.hpp"
#include "tweedie/linalg.hpp"
#include "tweedie/measures.hpp"

namespace tweedie {

/// Ordered observation points. Scalar grids built from a range are uniform
/// and record their spacing.
class Grid {
 public:
  static Grid uniform(double lo, double hi, int count);
  /// lo, lo + step, ... up to hi (inclusive within step * 1e-9).
  static Grid stepped(double lo, double hi, double step);
  static Grid from_points(std::vector<Vector> points);

  std::size_t size() const { return points_.size(); }
  const Vector& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Vector>& points() const { return points_; }
  Eigen::Index dim() const { return points_.empty() ? 0 : points_[0].size(); }
  bool is_scalar() const { return dim() == 1; }
  std::optional<double> spacing() const { return spacing_; }
  /// Scalar midpoint between the first and last point.
  double midpoint() const;

  /// Throws OutOfSupport if a point is not interior to the model's support
  /// (with the model's margin) and ShapeMismatch on a dimension mismatch.
  void validate(const ExpFamModel& model) const;

 private:
  std::vector<Vector> points_;
  std::optional<double> spacing_;
};

struct GridFunction {
  Grid grid;
  std::vector<Matrix> values;

  /// Header y0..y{k-1}, v0..v{n-1}; matrix values are flattened column-major.
  std::string to_csv() const;
  /// {"points": [[...]], "rows": r, "cols": c, "values": [[...]]}.
  std::string to_json() const;
};

/// Evaluates fn at every grid point (in parallel, assembled by index).
GridFunction tabulate(const Grid& grid, const std::function<Matrix(const Vector&)>& fn);

/// E[U | Y = y] with U = u_map(X).
Vector conditional_expectation(const Scenario& scenario, const Vector& y);

inline constexpr int kMaxMomentOrder = 6;

/// E[X^ell | Y = y] for scalar X.
double conditional_moment(const Scenario& scenario, int ell, double y);

/// log E[exp(t X) | Y = y] for scalar X, in log space.
double conditional_cgf(const Scenario& scenario, double t, double y);

/// ell-th conditional cumulant from the moment recurrence.
double conditional_cumulant(const Scenario& scenario, int ell, double y);

/// Cumulants kappa_1..kappa_n from raw moments m_1..m_n.
std::vector<double> cumulants_from_moments(const std::vector<double>& raw_moments);

/// Nodes and weights of a quadrature rule over the observation space.
struct YQuadrature {
  std::vector<Vector> nodes;
  std::vector<double> weights;
};

struct YQuadratureOptions {
  /// Explicit range; when absent the range is grown from the bulk of the
  /// marginal until the density falls below exp(-tail_log_drop) of its peak.
  std::optional<double> lo;
  std::optional<double> hi;
  int nodes_per_panel = 20;
  double tail_log_drop = 32.0;
};

/// Composite Gauss-Legendre rule on geometrically widening panels around
/// the marginal's bulk (scalar observations only).
YQuadrature make_y_quadrature(const Scenario& scenario, const YQuadratureOptions& options = {});

struct MmseResult {
  Matrix direct;          // E[Var(X | Y)]
  Matrix representation;  // E[(J_Y T(Y))^-1 J_Y E[X | Y]]
  Matrix difference;      // direct - representation
  double mass = 0.0;      // quadrature mass of the marginal density
};

/// Both sides of the MMSE representation. Requires u_map = identity and
/// dim_obs = dim_param; throws SingularJacobian when J_y T has condition
/// number above 1e12 at a node.
MmseResult mmse(const Scenario& scenario, const YQuadrature& quadrature, const FdPolicy& policy);

/// Largest-to-smallest singular value ratio.
double condition_number(const Matrix& m);

}  // namespace tweedie
