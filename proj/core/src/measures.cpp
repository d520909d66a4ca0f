#include "tweedie/measures.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "tweedie/error.hpp"
#include "tweedie/quadrature.hpp"

namespace tweedie {

// ---------------------------------------------------------------------------
// WeightedMeasure

namespace {

void validate_weights(const std::vector<Vector>& points, const std::vector<double>& weights) {
  if (points.empty()) throw Error(ErrorCode::DegeneratePrior, "measure has no atoms");
  if (points.size() != weights.size()) {
    throw Error(ErrorCode::InvalidArgument, "measure: points and weights differ in length");
  }
  const Eigen::Index d = points[0].size();
  bool any_positive = false;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (points[i].size() != d) {
      throw Error(ErrorCode::ShapeMismatch, "measure: atoms have inconsistent dimension");
    }
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "measure: weights must be finite and >= 0");
    }
    any_positive = any_positive || weights[i] > 0.0;
  }
  if (!any_positive) throw Error(ErrorCode::DegeneratePrior, "measure: all weights are zero");
}

}  // namespace

WeightedMeasure::WeightedMeasure(std::vector<Vector> points, std::vector<double> weights,
                                 bool normalize)
    : WeightedMeasure(std::make_shared<const std::vector<Vector>>(std::move(points)),
                      std::move(weights), normalize) {}

WeightedMeasure::WeightedMeasure(std::shared_ptr<const std::vector<Vector>> points,
                                 std::vector<double> weights, bool normalize)
    : points_(std::move(points)), weights_(std::move(weights)) {
  validate_weights(*points_, weights_);
  if (normalize) {
    const double total = total_mass();
    for (double& w : weights_) w /= total;
    normalized_ = true;
  } else {
    normalized_ = std::abs(total_mass() - 1.0) <= 1e-12;
  }
}

WeightedMeasure WeightedMeasure::point_mass(const Vector& x) {
  return WeightedMeasure(std::vector<Vector>{x}, std::vector<double>{1.0});
}

double WeightedMeasure::total_mass() const {
  double s = 0.0;
  for (double w : weights_) s += w;
  return s;
}

// ---------------------------------------------------------------------------
// Prior densities

Density1D normal_density(double mean, double sd, double lo, double hi) {
  if (!(sd > 0.0)) throw Error(ErrorCode::InvalidArgument, "normal prior: sd must be > 0");
  if (!(hi > lo)) throw Error(ErrorCode::InvalidArgument, "normal prior: empty box");
  const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
  return {"normal", {mean, sd}, lo, hi, [=](double x) {
            const double z = (x - mean) / sd;
            return norm * std::exp(-0.5 * z * z);
          }};
}

Density1D normal_density(double mean, double sd) {
  return normal_density(mean, sd, mean - 8.0 * sd, mean + 8.0 * sd);
}

Density1D gamma_density(double shape, double rate, double lo, double hi) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma prior: shape and rate must be > 0");
  }
  if (!(hi > lo) || lo < 0.0) throw Error(ErrorCode::InvalidArgument, "gamma prior: bad box");
  const double log_norm = shape * std::log(rate) - std::lgamma(shape);
  return {"gamma", {shape, rate}, lo, hi, [=](double x) {
            if (x <= 0.0) return 0.0;
            return std::exp(log_norm + (shape - 1.0) * std::log(x) - rate * x);
          }};
}

Density1D gamma_density(double shape, double rate) {
  const double upper = boost::math::gamma_q_inv(shape, 1e-12) / rate;
  return gamma_density(shape, rate, 0.0, upper);
}

Density1D uniform_density(double lo, double hi) {
  if (!(hi > lo)) throw Error(ErrorCode::InvalidArgument, "uniform prior: empty box");
  const double value = 1.0 / (hi - lo);
  return {"uniform", {lo, hi}, lo, hi, [=](double) { return value; }};
}

// ---------------------------------------------------------------------------
// discretize

namespace {

struct RawAtoms {
  std::vector<Vector> points;
  std::vector<double> weights;
  double mass = 0.0;
};

RawAtoms tensor_atoms(const ContinuousPrior& prior) {
  if (prior.factors.empty()) throw Error(ErrorCode::DegeneratePrior, "continuous prior has no factors");
  if (prior.nodes < 1) throw Error(ErrorCode::InvalidArgument, "continuous prior: nodes must be >= 1");
  const std::size_t dims = prior.factors.size();
  std::vector<GaussLegendreRule> rules;
  std::vector<std::vector<double>> factor_weights;
  for (const auto& f : prior.factors) {
    auto rule = gauss_legendre(prior.nodes, f.lo, f.hi);
    std::vector<double> w(rule.nodes.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = f.pdf(rule.nodes[i]) * rule.weights[i];
    rules.push_back(std::move(rule));
    factor_weights.push_back(std::move(w));
  }
  RawAtoms atoms;
  std::vector<std::size_t> idx(dims, 0);
  const auto n = static_cast<std::size_t>(prior.nodes);
  while (true) {
    Vector x(static_cast<Eigen::Index>(dims));
    double w = 1.0;
    for (std::size_t j = 0; j < dims; ++j) {
      x(static_cast<Eigen::Index>(j)) = rules[j].nodes[idx[j]];
      w *= factor_weights[j][idx[j]];
    }
    atoms.mass += w;
    if (w > 0.0) {
      atoms.points.push_back(std::move(x));
      atoms.weights.push_back(w);
    }
    std::size_t j = 0;
    while (j < dims && ++idx[j] == n) idx[j++] = 0;
    if (j == dims) break;
  }
  return atoms;
}

}  // namespace

WeightedMeasure discretize(const Prior& prior) {
  if (const auto* discrete = std::get_if<WeightedMeasure>(&prior)) {
    if (discrete->normalized()) return *discrete;
    return WeightedMeasure(discrete->shared_points(),
                           std::vector<double>(discrete->weights().begin(), discrete->weights().end()));
  }
  RawAtoms atoms = tensor_atoms(std::get<ContinuousPrior>(prior));
  if (atoms.points.empty() || !(atoms.mass > 0.0)) {
    throw Error(ErrorCode::DegeneratePrior, "all discretized prior weights underflow to zero");
  }
  return WeightedMeasure(std::move(atoms.points), std::move(atoms.weights));
}

double discretized_mass(const Prior& prior) {
  if (std::holds_alternative<WeightedMeasure>(prior)) return 1.0;
  return tensor_atoms(std::get<ContinuousPrior>(prior)).mass;
}

// ---------------------------------------------------------------------------
// UMap

UMap UMap::identity() { return UMap{}; }

UMap UMap::power(int ell) {
  if (ell < 0) throw Error(ErrorCode::InvalidArgument, "power u-map: exponent must be >= 0");
  UMap m;
  m.kind_ = Kind::Power;
  m.ell_ = ell;
  return m;
}

UMap UMap::component(Eigen::Index index) {
  if (index < 0) throw Error(ErrorCode::InvalidArgument, "component u-map: index must be >= 0");
  UMap m;
  m.kind_ = Kind::Component;
  m.index_ = index;
  return m;
}

UMap UMap::affine(Matrix a, Vector b) {
  if (a.rows() != b.size()) {
    throw Error(ErrorCode::ShapeMismatch, "affine u-map: A rows must match b length");
  }
  UMap m;
  m.kind_ = Kind::Affine;
  m.a_ = std::move(a);
  m.b_ = std::move(b);
  return m;
}

UMap UMap::outer_power(int ell) {
  if (ell < 0) throw Error(ErrorCode::InvalidArgument, "outer_power u-map: exponent must be >= 0");
  UMap m;
  m.kind_ = Kind::OuterPower;
  m.ell_ = ell;
  return m;
}

Vector UMap::operator()(const Vector& x) const {
  switch (kind_) {
    case Kind::Identity:
      return x;
    case Kind::Power:
      return x.array().pow(static_cast<double>(ell_)).matrix();
    case Kind::Component:
      return Vector::Constant(1, x(index_));
    case Kind::Affine:
      return a_ * x + b_;
    case Kind::OuterPower:
      // (x x')^ell x = |x|^(2 ell) x
      return std::pow(x.squaredNorm(), ell_) * x;
  }
  return x;
}

Eigen::Index UMap::output_dim(Eigen::Index param_dim) const {
  switch (kind_) {
    case Kind::Component: return 1;
    case Kind::Affine: return a_.rows();
    default: return param_dim;
  }
}

void UMap::validate(Eigen::Index param_dim) const {
  if (kind_ == Kind::Component && index_ >= param_dim) {
    throw Error(ErrorCode::ShapeMismatch, "component u-map index " + std::to_string(index_) +
                                              " out of range for dimension " +
                                              std::to_string(param_dim));
  }
  if (kind_ == Kind::Affine && a_.cols() != param_dim) {
    throw Error(ErrorCode::ShapeMismatch, "affine u-map: A has " + std::to_string(a_.cols()) +
                                              " columns, parameter dimension is " +
                                              std::to_string(param_dim));
  }
}

std::string UMap::describe() const {
  switch (kind_) {
    case Kind::Identity: return "identity";
    case Kind::Power: return "power(" + std::to_string(ell_) + ")";
    case Kind::Component: return "component(" + std::to_string(index_) + ")";
    case Kind::Affine: return "affine";
    case Kind::OuterPower: return "outer_power(" + std::to_string(ell_) + ")";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Scenario

Scenario::Scenario(std::string name, ModelPtr model, Prior prior, UMap u_map)
    : name_(std::move(name)),
      model_(std::move(model)),
      prior_(std::move(prior)),
      u_map_(std::move(u_map)),
      atoms_(discretize(prior_)) {
  if (!model_) throw Error(ErrorCode::InvalidArgument, "scenario requires a model");
  if (atoms_.dim() != model_->dim_param()) {
    throw Error(ErrorCode::ShapeMismatch,
                "prior dimension " + std::to_string(atoms_.dim()) + " does not match " +
                    model_->name() + " parameter dimension " +
                    std::to_string(model_->dim_param()));
  }
  u_map_.validate(model_->dim_param());
  log_partition_.reserve(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (!model_->in_param_space(atoms_.point(i))) {
      std::ostringstream os;
      os << "prior atom [" << atoms_.point(i).transpose() << "] outside the natural parameter space of "
         << model_->name();
      throw Error(ErrorCode::OutOfSupport, os.str());
    }
    log_partition_.push_back(model_->log_partition(atoms_.point(i)));
  }
}

// ---------------------------------------------------------------------------
// Posterior and functionals

namespace {

void require_observation(const Scenario& s, const Vector& y) {
  if (!s.model().in_support(y)) {
    std::ostringstream os;
    os << s.model().name() << ": observation [" << y.transpose() << "] outside the open support";
    throw Error(ErrorCode::OutOfSupport, os.str());
  }
}

// log(prior weight) + <x_i, T(y)> - phi(x_i); log h(y) is common to all atoms.
std::vector<double> atom_log_terms(const Scenario& s, const Vector& y, double& max_term) {
  const Vector t = s.model().sufficient_stat(y);
  const auto& atoms = s.prior_atoms();
  const auto phi = s.atom_log_partition();
  std::vector<double> terms(atoms.size());
  max_term = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double w = atoms.weight(i);
    terms[i] = w > 0.0 ? std::log(w) + atoms.point(i).dot(t) - phi[i]
                       : -std::numeric_limits<double>::infinity();
    if (terms[i] > max_term) max_term = terms[i];
  }
  if (!std::isfinite(max_term)) {
    std::ostringstream os;
    os << "every likelihood vanished at y = [" << y.transpose() << "]";
    throw Error(ErrorCode::AllWeightsVanished, os.str());
  }
  return terms;
}

}  // namespace

WeightedMeasure posterior(const Scenario& scenario, const Vector& y) {
  require_observation(scenario, y);
  double max_term = 0.0;
  std::vector<double> terms = atom_log_terms(scenario, y, max_term);
  for (double& t : terms) t = std::exp(t - max_term);
  return WeightedMeasure(scenario.prior_atoms().shared_points(), std::move(terms));
}

Vector expect(const WeightedMeasure& measure, const VectorFn& f) {
  Vector acc;
  for (std::size_t i = 0; i < measure.size(); ++i) {
    const double w = measure.weight(i);
    if (w == 0.0) continue;
    const Vector v = f(measure.point(i));
    if (acc.size() == 0) acc = Vector::Zero(v.size());
    acc += w * v;
  }
  return acc;
}

Matrix cov(const WeightedMeasure& measure, const VectorFn& f, const VectorFn& g) {
  const Vector mean_f = expect(measure, f);
  const Vector mean_g = expect(measure, g);
  // two-pass form: centring first avoids cancellation in E[fg'] - E[f]E[g]'
  Matrix centred = Matrix::Zero(mean_f.size(), mean_g.size());
  for (std::size_t i = 0; i < measure.size(); ++i) {
    const double w = measure.weight(i);
    if (w == 0.0) continue;
    centred.noalias() += w * (f(measure.point(i)) - mean_f) * (g(measure.point(i)) - mean_g).transpose();
  }
  return centred;
}

double log_marginal_density(const Scenario& scenario, const Vector& y) {
  require_observation(scenario, y);
  double max_term = 0.0;
  const std::vector<double> terms = atom_log_terms(scenario, y, max_term);
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - max_term);
  return scenario.model().log_base_measure(y) + max_term + std::log(sum);
}

double marginal_density(const Scenario& scenario, const Vector& y) {
  const double value = std::exp(log_marginal_density(scenario, y));
  if (!(value > 0.0)) {
    std::ostringstream os;
    os << "marginal density underflows at y = [" << y.transpose() << "]";
    throw Error(ErrorCode::AllWeightsVanished, os.str());
  }
  return value;
}

}  // namespace tweedie
