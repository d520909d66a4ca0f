#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tweedie/linalg.hpp"
#include "tweedie/model.hpp"

namespace tweedie {

/// Finite atomic measure over parameter points. Atom locations are shared
/// between a prior and the posteriors derived from it.
class WeightedMeasure {
 public:
  /// Weights must be finite, nonnegative and not all zero. When `normalize`
  /// is set the weights are rescaled to sum to one.
  WeightedMeasure(std::vector<Vector> points, std::vector<double> weights, bool normalize = true);
  WeightedMeasure(std::shared_ptr<const std::vector<Vector>> points, std::vector<double> weights,
                  bool normalize = true);

  static WeightedMeasure point_mass(const Vector& x);

  std::size_t size() const { return weights_.size(); }
  Eigen::Index dim() const { return (*points_)[0].size(); }
  const Vector& point(std::size_t i) const { return (*points_)[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  const std::vector<Vector>& points() const { return *points_; }
  const std::shared_ptr<const std::vector<Vector>>& shared_points() const { return points_; }
  bool normalized() const { return normalized_; }
  double total_mass() const;

 private:
  std::shared_ptr<const std::vector<Vector>> points_;
  std::vector<double> weights_;
  bool normalized_ = false;
};

/// One-dimensional prior factor with its truncation interval.
struct Density1D {
  std::string name;
  std::vector<double> params;
  double lo = 0.0;
  double hi = 0.0;
  std::function<double(double)> pdf;
};

/// Normal(mean, sd), truncated by default to mean +/- 8 sd.
Density1D normal_density(double mean, double sd);
Density1D normal_density(double mean, double sd, double lo, double hi);
/// Gamma(shape, rate), truncated by default to (0, upper 1e-12 quantile].
Density1D gamma_density(double shape, double rate);
Density1D gamma_density(double shape, double rate, double lo, double hi);
Density1D uniform_density(double lo, double hi);

/// Product density over the natural parameter, discretized by a tensor
/// Gauss-Legendre rule with `nodes` points per dimension.
struct ContinuousPrior {
  std::vector<Density1D> factors;
  int nodes = 64;
};

using Prior = std::variant<WeightedMeasure, ContinuousPrior>;

/// Atoms at quadrature nodes weighted by density x quadrature weight, then
/// normalized. Discrete priors pass through (normalized).
WeightedMeasure discretize(const Prior& prior);

/// Mass the quadrature rule assigns to a continuous prior before
/// normalization (1 for discrete priors).
double discretized_mass(const Prior& prior);

/// Deterministic U-map g(x) defining U = g(X).
class UMap {
 public:
  enum class Kind { Identity, Power, Component, Affine, OuterPower };

  static UMap identity();
  /// Elementwise x_i^ell.
  static UMap power(int ell);
  /// x_i (zero-based).
  static UMap component(Eigen::Index index);
  static UMap affine(Matrix a, Vector b);
  /// (x x')^ell x.
  static UMap outer_power(int ell);

  Kind kind() const { return kind_; }
  Vector operator()(const Vector& x) const;
  Eigen::Index output_dim(Eigen::Index param_dim) const;
  /// Throws ShapeMismatch if the map cannot act on `param_dim`-vectors.
  void validate(Eigen::Index param_dim) const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::Identity;
  int ell_ = 1;
  Eigen::Index index_ = 0;
  Matrix a_;
  Vector b_;
};

/// Markov chain U <-> X <-> Y: observation model, prior over X and U = g(X).
class Scenario {
 public:
  Scenario(std::string name, ModelPtr model, Prior prior, UMap u_map = UMap::identity());

  const std::string& name() const { return name_; }
  const ExpFamModel& model() const { return *model_; }
  const ModelPtr& model_ptr() const { return model_; }
  const Prior& prior() const { return prior_; }
  const WeightedMeasure& prior_atoms() const { return atoms_; }
  const UMap& u_map() const { return u_map_; }
  Eigen::Index dim_u() const { return u_map_.output_dim(model_->dim_param()); }
  /// phi(x_i) for each prior atom.
  std::span<const double> atom_log_partition() const { return log_partition_; }

 private:
  std::string name_;
  ModelPtr model_;
  Prior prior_;
  UMap u_map_;
  WeightedMeasure atoms_;
  std::vector<double> log_partition_;
};

/// Posterior over the prior atoms: weights proportional to prior weight times
/// the likelihood at y, computed in log space with max-subtraction.
WeightedMeasure posterior(const Scenario& scenario, const Vector& y);

/// Sum_i w_i f(x_i).
Vector expect(const WeightedMeasure& measure, const VectorFn& f);

/// Sum_i w_i f(x_i) g(x_i)' - (Sum_i w_i f(x_i)) (Sum_i w_i g(x_i))'.
Matrix cov(const WeightedMeasure& measure, const VectorFn& f, const VectorFn& g);

/// f_Y(y) = Sum_i w_i exp(loglik(x_i, y)). Throws AllWeightsVanished when the
/// value underflows to zero.
double marginal_density(const Scenario& scenario, const Vector& y);
double log_marginal_density(const Scenario& scenario, const Vector& y);

}  // namespace tweedie
