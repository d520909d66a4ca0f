#pragma once

#include <map>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tweedie/linalg.hpp"

namespace tweedie {

struct ModelOptions {
  /// Strict-interiority margin for observations, in the observation's scale.
  double support_margin = 1e-8;
  /// Reproduce the printed log-determinant gradient D'D y (instead of
  /// D' vec(A^-1)) in the Wishart and gamma shape-rate Jacobians.
  bool printed_logdet_gradient = false;
};

/// Observation space descriptor: an axis-aligned box (entries may be
/// infinite) or the cone of p x p positive definite matrices in vech form.
class Support {
 public:
  enum class Kind { Box, PositiveDefiniteCone };

  static Support box(Vector lower, Vector upper);
  static Support interval(double lower, double upper);
  static Support pd_cone(Eigen::Index p);

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  Eigen::Index matrix_dim() const { return matrix_dim_; }

  /// True if y lies inside with at least `margin` clearance.
  bool contains(const Vector& y, double margin) const;

  /// Bounds of a one-dimensional support; throws ShapeMismatch otherwise.
  std::pair<double, double> bounds_1d() const;

 private:
  Kind kind_ = Kind::Box;
  Eigen::Index dim_ = 0;
  Eigen::Index matrix_dim_ = 0;
  Vector lower_;
  Vector upper_;
};

/// Exponential-family observation law
///   f(y | x) = h(y) exp(<x, T(y)> - phi(x)),  y in the open support.
/// Instances are immutable after construction.
class ExpFamModel {
 public:
  explicit ExpFamModel(ModelOptions options) : options_(options) {}
  virtual ~ExpFamModel() = default;

  virtual std::string name() const = 0;
  virtual Eigen::Index dim_param() const = 0;
  virtual Eigen::Index dim_obs() const = 0;
  virtual bool in_param_space(const Vector& x) const = 0;

  virtual double log_base_measure(const Vector& y) const = 0;
  virtual Vector grad_log_base_measure(const Vector& y) const = 0;
  virtual Vector sufficient_stat(const Vector& y) const = 0;
  /// k x d, column j is the gradient of T_j.
  virtual Matrix stat_jacobian(const Vector& y) const = 0;
  virtual double log_partition(const Vector& x) const = 0;

  /// Maps conventional parameters (see source_layout) to the natural parameter.
  virtual Vector natural_from_source(const Vector& source) const = 0;
  virtual std::string source_layout() const = 0;
  virtual std::string convention() const = 0;

  virtual Vector sample(const Vector& x, std::mt19937_64& rng) const = 0;
  /// E[Y | X = x]; used to place quadrature split points.
  virtual Vector observation_mean(const Vector& x) const = 0;

  // Scalar models (d = k = 1) expose derivative lists starting at order 0:
  // [T, T', T'', ...] and [log h, (log h)', ...].
  virtual int max_derivative_order() const { return 0; }
  virtual std::vector<double> stat_derivatives(double y, int order) const;
  virtual std::vector<double> log_base_derivatives(double y, int order) const;
  /// T' is constant on the support.
  virtual bool linear_statistic() const { return false; }

  bool is_scalar() const { return dim_param() == 1 && dim_obs() == 1; }
  const Support& support() const { return support_; }
  const ModelOptions& options() const { return options_; }
  double support_margin() const { return options_.support_margin; }
  bool in_support(const Vector& y) const {
    return y.size() == dim_obs() && support_.contains(y, options_.support_margin);
  }

  /// T'(y) for scalar models.
  double stat_prime(double y) const { return stat_derivatives(y, 1)[1]; }

 protected:
  Support support_;
  ModelOptions options_;
};

using ModelPtr = std::shared_ptr<const ExpFamModel>;

/// log h(y) + <x, T(y)> - phi(x). Throws OutOfSupport for y outside the open
/// support (with margin) or x outside the natural parameter space.
double eval_log_likelihood(const ExpFamModel& model, const Vector& x, const Vector& y);

/// grad_y log h(y) + J_y T(y) x.
Vector conditional_score(const ExpFamModel& model, const Vector& x, const Vector& y);

/// Convenience for scalar observations.
inline Vector obs(double y) { return Vector::Constant(1, y); }

struct CatalogEntry {
  std::string name;
  std::vector<std::string> parameters;
  std::string description;
};

const std::vector<CatalogEntry>& model_catalog();

using ParamMap = std::map<std::string, double>;

/// Builds a catalog model by name; throws InvalidArgument on unknown names or
/// missing/invalid parameters.
ModelPtr make_model(std::string_view name, const ParamMap& params, const ModelOptions& options = {});

}  // namespace tweedie
