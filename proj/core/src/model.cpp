#include "tweedie/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "tweedie/error.hpp"

namespace tweedie {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

bool positive_definite(const Matrix& m) {
  if (!m.allFinite()) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

double log_det_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::OutOfSupport, "matrix is not positive definite");
  }
  const Matrix& l = llt.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

double log_multivariate_gamma(Eigen::Index p, double a) {
  double s = 0.25 * static_cast<double>(p * (p - 1)) * std::log(std::numbers::pi);
  for (Eigen::Index j = 1; j <= p; ++j) s += std::lgamma(a + 0.5 * static_cast<double>(1 - j));
  return s;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// d^r/dy^r log y for r >= 1.
double log_derivative(double y, int r) {
  const double sign = (r % 2 == 1) ? 1.0 : -1.0;
  return sign * factorial(r - 1) / std::pow(y, r);
}

// d^r/dy^r (log y)^2 for r >= 1.
double log_squared_derivative(double y, int r) {
  double harmonic = 0.0;
  for (int i = 1; i <= r - 1; ++i) harmonic += 1.0 / i;
  const double sign = (r % 2 == 0) ? 1.0 : -1.0;
  return sign * 2.0 * factorial(r - 1) * (harmonic - std::log(y)) / std::pow(y, r);
}

double require_param(const ParamMap& params, const std::string& key, std::string_view model) {
  auto it = params.find(key);
  if (it == params.end()) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(model) + ": missing parameter '" + key + "'");
  }
  if (!std::isfinite(it->second)) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(model) + ": parameter '" + key + "' must be finite");
  }
  return it->second;
}

void check_size(const Vector& v, Eigen::Index n, std::string_view what) {
  if (v.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": expected length " +
                                              std::to_string(n) + ", got " +
                                              std::to_string(v.size()));
  }
}

constexpr int kScalarOrderCap = 12;

void check_order(int order) {
  if (order < 0 || order > kScalarOrderCap) {
    throw Error(ErrorCode::InvalidArgument,
                "derivative order " + std::to_string(order) + " outside [0, 12]");
  }
}

// ---------------------------------------------------------------------------

class GaussianKnownVariance final : public ExpFamModel {
 public:
  GaussianKnownVariance(double variance, ModelOptions options)
      : ExpFamModel(options), variance_(variance) {
    if (!(variance > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "GaussianKnownVariance: variance must be > 0");
    }
    support_ = Support::interval(-kInf, kInf);
  }

  std::string name() const override { return "GaussianKnownVariance"; }
  Eigen::Index dim_param() const override { return 1; }
  Eigen::Index dim_obs() const override { return 1; }
  bool in_param_space(const Vector& x) const override {
    return x.size() == 1 && std::isfinite(x(0));
  }
  double log_base_measure(const Vector& y) const override {
    return -0.5 * std::log(2.0 * std::numbers::pi * variance_) - 0.5 * y(0) * y(0) / variance_;
  }
  Vector grad_log_base_measure(const Vector& y) const override { return obs(-y(0) / variance_); }
  Vector sufficient_stat(const Vector& y) const override { return y; }
  Matrix stat_jacobian(const Vector&) const override { return Matrix::Ones(1, 1); }
  double log_partition(const Vector& x) const override { return 0.5 * variance_ * x(0) * x(0); }
  Vector natural_from_source(const Vector& source) const override {
    check_size(source, 1, "GaussianKnownVariance source");
    return obs(source(0) / variance_);
  }
  std::string source_layout() const override { return "[mean]"; }
  std::string convention() const override {
    return "x = mean / variance, T(y) = y, h = N(0, variance) density, phi(x) = variance x^2 / 2";
  }
  Vector sample(const Vector& x, std::mt19937_64& rng) const override {
    std::normal_distribution<double> n(variance_ * x(0), std::sqrt(variance_));
    return obs(n(rng));
  }
  Vector observation_mean(const Vector& x) const override { return obs(variance_ * x(0)); }

  int max_derivative_order() const override { return kScalarOrderCap; }
  std::vector<double> stat_derivatives(double y, int order) const override {
    check_order(order);
    std::vector<double> d(order + 1, 0.0);
    d[0] = y;
    if (order >= 1) d[1] = 1.0;
    return d;
  }
  std::vector<double> log_base_derivatives(double y, int order) const override {
    check_order(order);
    std::vector<double> d(order + 1, 0.0);
    d[0] = log_base_measure(obs(y));
    if (order >= 1) d[1] = -y / variance_;
    if (order >= 2) d[2] = -1.0 / variance_;
    return d;
  }
  bool linear_statistic() const override { return true; }

 private:
  double variance_;
};

class ExponentialRate final : public ExpFamModel {
 public:
  explicit ExponentialRate(ModelOptions options) : ExpFamModel(options) {
    support_ = Support::interval(0.0, kInf);
  }

  std::string name() const override { return "ExponentialRate"; }
  Eigen::Index dim_param() const override { return 1; }
  Eigen::Index dim_obs() const override { return 1; }
  bool in_param_space(const Vector& x) const override {
    return x.size() == 1 && std::isfinite(x(0)) && x(0) > 0.0;
  }
  double log_base_measure(const Vector&) const override { return 0.0; }
  Vector grad_log_base_measure(const Vector&) const override { return obs(0.0); }
  Vector sufficient_stat(const Vector& y) const override { return obs(-y(0)); }
  Matrix stat_jacobian(const Vector&) const override { return Matrix::Constant(1, 1, -1.0); }
  double log_partition(const Vector& x) const override { return -std::log(x(0)); }
  Vector natural_from_source(const Vector& source) const override {
    check_size(source, 1, "ExponentialRate source");
    return source;
  }
  std::string source_layout() const override { return "[rate]"; }
  std::string convention() const override {
    return "x = rate b > 0, T(y) = -y, h = 1, phi(x) = -log x";
  }
  Vector sample(const Vector& x, std::mt19937_64& rng) const override {
    std::exponential_distribution<double> e(x(0));
    return obs(e(rng));
  }
  Vector observation_mean(const Vector& x) const override { return obs(1.0 / x(0)); }

  int max_derivative_order() const override { return kScalarOrderCap; }
  std::vector<double> stat_derivatives(double y, int order) const override {
    check_order(order);
    std::vector<double> d(order + 1, 0.0);
    d[0] = -y;
    if (order >= 1) d[1] = -1.0;
    return d;
  }
  std::vector<double> log_base_derivatives(double, int order) const override {
    check_order(order);
    return std::vector<double>(order + 1, 0.0);
  }
  bool linear_statistic() const override { return true; }
};

class GammaKnownRate final : public ExpFamModel {
 public:
  GammaKnownRate(double rate, ModelOptions options) : ExpFamModel(options), rate_(rate) {
    if (!(rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "GammaKnownRate: rate must be > 0");
    support_ = Support::interval(0.0, kInf);
  }

  std::string name() const override { return "GammaKnownRate"; }
  Eigen::Index dim_param() const override { return 1; }
  Eigen::Index dim_obs() const override { return 1; }
  bool in_param_space(const Vector& x) const override {
    return x.size() == 1 && std::isfinite(x(0)) && x(0) > -1.0;
  }
  double log_base_measure(const Vector& y) const override { return -rate_ * y(0); }
  Vector grad_log_base_measure(const Vector&) const override { return obs(-rate_); }
  Vector sufficient_stat(const Vector& y) const override { return obs(std::log(y(0))); }
  Matrix stat_jacobian(const Vector& y) const override {
    return Matrix::Constant(1, 1, 1.0 / y(0));
  }
  double log_partition(const Vector& x) const override {
    const double shape = x(0) + 1.0;
    return std::lgamma(shape) - shape * std::log(rate_);
  }
  Vector natural_from_source(const Vector& source) const override {
    check_size(source, 1, "GammaKnownRate source");
    return obs(source(0) - 1.0);
  }
  std::string source_layout() const override { return "[shape]"; }
  std::string convention() const override {
    return "x = shape - 1 > -1, T(y) = log y, h = exp(-rate y), phi(x) = lgamma(x+1) - (x+1) log rate";
  }
  Vector sample(const Vector& x, std::mt19937_64& rng) const override {
    std::gamma_distribution<double> g(x(0) + 1.0, 1.0 / rate_);
    return obs(g(rng));
  }
  Vector observation_mean(const Vector& x) const override { return obs((x(0) + 1.0) / rate_); }

  int max_derivative_order() const override { return kScalarOrderCap; }
  std::vector<double> stat_derivatives(double y, int order) const override {
    check_order(order);
    std::vector<double> d(order + 1);
    d[0] = std::log(y);
    for (int r = 1; r <= order; ++r) d[r] = log_derivative(y, r);
    return d;
  }
  std::vector<double> log_base_derivatives(double y, int order) const override {
    check_order(order);
    std::vector<double> d(order + 1, 0.0);
    d[0] = -rate_ * y;
    if (order >= 1) d[1] = -rate_;
    return d;
  }

 private:
  double rate_;
};

class LogNormalKnownVariance final : public ExpFamModel {
 public:
  LogNormalKnownVariance(double variance, ModelOptions options)
      : ExpFamModel(options), variance_(variance) {
    if (!(variance > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "LogNormalKnownVariance: variance must be > 0");
    }
    support_ = Support::interval(0.0, kInf);
  }

  std::string name() const override { return "LogNormalKnownVariance"; }
  Eigen::Index dim_param() const override { return 1; }
  Eigen::Index dim_obs() const override { return 1; }
  bool in_param_space(const Vector& x) const override {
    return x.size() == 1 && std::isfinite(x(0));
  }
  double log_base_measure(const Vector& y) const override {
    const double ly = std::log(y(0));
    return -ly - 0.5 * std::log(2.0 * std::numbers::pi * variance_) - 0.5 * ly * ly / variance_;
  }
  Vector grad_log_base_measure(const Vector& y) const override {
    return obs(-1.0 / y(0) - std::log(y(0)) / (variance_ * y(0)));
  }
  Vector sufficient_stat(const Vector& y) const override { return obs(std::log(y(0))); }
  Matrix stat_jacobian(const Vector& y) const override {
    return Matrix::Constant(1, 1, 1.0 / y(0));
  }
  double log_partition(const Vector& x) const override { return 0.5 * variance_ * x(0) * x(0); }
  Vector natural_from_source(const Vector& source) const override {
    check_size(source, 1, "LogNormalKnownVariance source");
    return obs(source(0) / variance_);
  }
  std::string source_layout() const override { return "[log-mean]"; }
  std::string convention() const override {
    return "x = mu / variance with log Y ~ N(mu, variance), T(y) = log y, phi(x) = variance x^2 / 2";
  }
  Vector sample(const Vector& x, std::mt19937_64& rng) const override {
    std::normal_distribution<double> n(variance_ * x(0), std::sqrt(variance_));
    return obs(std::exp(n(rng)));
  }
  Vector observation_mean(const Vector& x) const override {
    return obs(std::exp(variance_ * x(0) + 0.5 * variance_));
  }

  int max_derivative_order() const override { return kScalarOrderCap; }
  std::vector<double> stat_derivatives(double y, int order) const override {
    check_order(order);
    std::vector<double> d(order + 1);
    d[0] = std::log(y);
    for (int r = 1; r <= order; ++r) d[r] = log_derivative(y, r);
    return d;
  }
  std::vector<double> log_base_derivatives(double y, int order) const override {
    check_order(order);
    std::vector<double> d(order + 1);
    d[0] = log_base_measure(obs(y));
    for (int r = 1; r <= order; ++r) {
      d[r] = -log_derivative(y, r) - 0.5 * log_squared_derivative(y, r) / variance_;
    }
    return d;
  }

 private:
  double variance_;
};

class GammaShapeRate final : public ExpFamModel {
 public:
  explicit GammaShapeRate(ModelOptions options) : ExpFamModel(options) {
    support_ = Support::interval(0.0, kInf);
  }

  std::string name() const override { return "GammaShapeRate"; }
  Eigen::Index dim_param() const override { return 2; }
  Eigen::Index dim_obs() const override { return 1; }
  bool in_param_space(const Vector& x) const override {
    return x.size() == 2 && x.allFinite() && x(0) < 0.0 && x(1) > -1.0;
  }
  double log_base_measure(const Vector&) const override { return 0.0; }
  Vector grad_log_base_measure(const Vector&) const override { return obs(0.0); }
  Vector sufficient_stat(const Vector& y) const override {
    return Vector{{y(0), std::log(y(0))}};
  }
  Matrix stat_jacobian(const Vector& y) const override {
    const double logdet_grad = options_.printed_logdet_gradient ? y(0) : 1.0 / y(0);
    return Matrix{{1.0, logdet_grad}};
  }
  double log_partition(const Vector& x) const override {
    const double shape = x(1) + 1.0;
    const double rate = -x(0);
    return std::lgamma(shape) - shape * std::log(rate);
  }
  Vector natural_from_source(const Vector& source) const override {
    check_size(source, 2, "GammaShapeRate source");
    return Vector{{-source(1), source(0) - 1.0}};
  }
  std::string source_layout() const override { return "[shape, rate]"; }
  std::string convention() const override {
    return "x = [-rate, shape - 1], T(y) = [y, log y], h = 1, phi(x) = lgamma(a) - a log b";
  }
  Vector sample(const Vector& x, std::mt19937_64& rng) const override {
    std::gamma_distribution<double> g(x(1) + 1.0, -1.0 / x(0));
    return obs(g(rng));
  }
  Vector observation_mean(const Vector& x) const override {
    return obs((x(1) + 1.0) / -x(0));
  }
};

class Wishart final : public ExpFamModel {
 public:
  Wishart(Eigen::Index p, ModelOptions options) : ExpFamModel(options), p_(p) {
    if (p < 1 || p > 2) throw Error(ErrorCode::InvalidArgument, "Wishart: p must be 1 or 2");
    support_ = Support::pd_cone(p);
    dup_ = vech_operators(p).duplication;
  }

  std::string name() const override { return "Wishart"; }
  Eigen::Index dim_param() const override { return p_ * p_ + 1; }
  Eigen::Index dim_obs() const override { return vech_size(p_); }

  bool in_param_space(const Vector& x) const override {
    if (x.size() != dim_param() || !x.allFinite()) return false;
    const Matrix v_inv = -2.0 * unvec(x.head(p_ * p_), p_);
    const double scale = std::max(1.0, v_inv.cwiseAbs().maxCoeff());
    if ((v_inv - v_inv.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) return false;
    return positive_definite(symmetrized(v_inv)) && dof(x) > static_cast<double>(p_ - 1);
  }
  double log_base_measure(const Vector&) const override { return 0.0; }
  Vector grad_log_base_measure(const Vector&) const override {
    return Vector::Zero(dim_obs());
  }
  Vector sufficient_stat(const Vector& y) const override {
    const Matrix a = unvech(y);
    Vector t(dim_param());
    t.head(p_ * p_) = vec(a);
    t(p_ * p_) = log_det_spd(a);
    return t;
  }
  Matrix stat_jacobian(const Vector& y) const override {
    Matrix j(dim_obs(), dim_param());
    j.leftCols(p_ * p_) = dup_.transpose();
    if (options_.printed_logdet_gradient) {
      j.col(p_ * p_) = dup_.transpose() * dup_ * y;
    } else {
      const Matrix a_inv = unvech(y).inverse();
      j.col(p_ * p_) = dup_.transpose() * vec(a_inv);
    }
    return j;
  }
  double log_partition(const Vector& x) const override {
    const Matrix v_inv = symmetrized(-2.0 * unvec(x.head(p_ * p_), p_));
    const double log_det_v = -log_det_spd(v_inv);
    const double n = dof(x);
    const double pd = static_cast<double>(p_);
    return 0.5 * n * log_det_v + log_multivariate_gamma(p_, 0.5 * n) +
           0.5 * n * pd * std::numbers::ln2;
  }
  Vector natural_from_source(const Vector& source) const override {
    check_size(source, p_ * p_ + 1, "Wishart source");
    const Matrix v = unvec(source.head(p_ * p_), p_);
    if (!positive_definite(v)) {
      throw Error(ErrorCode::OutOfSupport, "Wishart source: V is not positive definite");
    }
    Vector x(dim_param());
    x.head(p_ * p_) = -0.5 * vec(symmetrized(v.inverse()));
    x(p_ * p_) = 0.5 * (source(p_ * p_) - static_cast<double>(p_) - 1.0);
    return x;
  }
  std::string source_layout() const override { return "[vec(V), n]"; }
  std::string convention() const override {
    return "y = vech(A), x = [-vec(V^-1)/2, (n-p-1)/2], T = [vec(A), log|A|], h = 1";
  }
  Vector sample(const Vector& x, std::mt19937_64& rng) const override {
    const Matrix v = symmetrized(-2.0 * unvec(x.head(p_ * p_), p_)).inverse();
    const double n = dof(x);
    const Matrix l = Eigen::LLT<Matrix>(symmetrized(v)).matrixL();
    Matrix z = Matrix::Zero(p_, p_);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < p_; ++i) {
      std::chi_squared_distribution<double> chi(n - static_cast<double>(i));
      z(i, i) = std::sqrt(chi(rng));
      for (Eigen::Index j = 0; j < i; ++j) z(i, j) = normal(rng);
    }
    const Matrix lz = l * z;
    return vech(symmetrized(lz * lz.transpose()));
  }
  Vector observation_mean(const Vector& x) const override {
    const Matrix v = symmetrized(-2.0 * unvec(x.head(p_ * p_), p_)).inverse();
    return vech(symmetrized(dof(x) * v));
  }

 private:
  double dof(const Vector& x) const {
    return 2.0 * x(p_ * p_) + static_cast<double>(p_) + 1.0;
  }

  Eigen::Index p_;
  Matrix dup_;
};

class GaussianUnknownMeanCov final : public ExpFamModel {
 public:
  GaussianUnknownMeanCov(Eigen::Index k, ModelOptions options) : ExpFamModel(options), k_(k) {
    if (k < 1 || k > 4) {
      throw Error(ErrorCode::InvalidArgument, "GaussianUnknownMeanCov: dim must be in [1, 4]");
    }
    support_ = Support::box(Vector::Constant(k, -kInf), Vector::Constant(k, kInf));
  }

  std::string name() const override { return "GaussianUnknownMeanCov"; }
  Eigen::Index dim_param() const override { return k_ + k_ * k_; }
  Eigen::Index dim_obs() const override { return k_; }

  bool in_param_space(const Vector& x) const override {
    if (x.size() != dim_param() || !x.allFinite()) return false;
    const Matrix lambda = precision(x);
    const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
    if ((lambda - lambda.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) return false;
    return positive_definite(symmetrized(lambda));
  }
  double log_base_measure(const Vector&) const override {
    return -0.5 * static_cast<double>(k_) * std::log(2.0 * std::numbers::pi);
  }
  Vector grad_log_base_measure(const Vector&) const override { return Vector::Zero(k_); }
  Vector sufficient_stat(const Vector& y) const override {
    Vector t(dim_param());
    t.head(k_) = y;
    t.tail(k_ * k_) = vec(y * y.transpose());
    return t;
  }
  Matrix stat_jacobian(const Vector& y) const override {
    Matrix j(k_, dim_param());
    const Matrix eye = Matrix::Identity(k_, k_);
    j.leftCols(k_) = eye;
    j.rightCols(k_ * k_) = kronecker(y.transpose(), eye) + kronecker(eye, y.transpose());
    return j;
  }
  double log_partition(const Vector& x) const override {
    const Matrix lambda = symmetrized(precision(x));
    Eigen::LLT<Matrix> llt(lambda);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::OutOfSupport, "GaussianUnknownMeanCov: precision not PD");
    }
    const Vector eta = x.head(k_);
    return 0.5 * (eta.dot(llt.solve(eta)) - log_det_spd(lambda));
  }
  Vector natural_from_source(const Vector& source) const override {
    check_size(source, k_ + k_ * k_, "GaussianUnknownMeanCov source");
    const Matrix sigma = unvec(source.tail(k_ * k_), k_);
    if (!positive_definite(sigma)) {
      throw Error(ErrorCode::OutOfSupport, "GaussianUnknownMeanCov source: Sigma not PD");
    }
    const Matrix lambda = symmetrized(sigma.inverse());
    Vector x(dim_param());
    x.head(k_) = lambda * source.head(k_);
    x.tail(k_ * k_) = -0.5 * vec(lambda);
    return x;
  }
  std::string source_layout() const override { return "[m (k), vec(Sigma) (k^2)]"; }
  std::string convention() const override {
    return "x = [Sigma^-1 m, vec(-Sigma^-1/2)], T(y) = [y, vec(y y')], h = (2 pi)^(-k/2)";
  }
  Vector sample(const Vector& x, std::mt19937_64& rng) const override {
    const Matrix sigma = symmetrized(precision(x)).inverse();
    const Vector mean = sigma * x.head(k_);
    const Matrix l = Eigen::LLT<Matrix>(symmetrized(sigma)).matrixL();
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(k_);
    for (Eigen::Index i = 0; i < k_; ++i) z(i) = normal(rng);
    return mean + l * z;
  }
  Vector observation_mean(const Vector& x) const override {
    return symmetrized(precision(x)).llt().solve(Vector(x.head(k_)));
  }

 private:
  Matrix precision(const Vector& x) const { return -2.0 * unvec(x.tail(k_ * k_), k_); }

  Eigen::Index k_;
};

}  // namespace

// ---------------------------------------------------------------------------

Support Support::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) {
    throw Error(ErrorCode::InvalidArgument, "Support::box: bound lengths differ");
  }
  Support s;
  s.kind_ = Kind::Box;
  s.dim_ = lower.size();
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

Support Support::interval(double lower, double upper) {
  return box(Vector::Constant(1, lower), Vector::Constant(1, upper));
}

Support Support::pd_cone(Eigen::Index p) {
  Support s;
  s.kind_ = Kind::PositiveDefiniteCone;
  s.matrix_dim_ = p;
  s.dim_ = vech_size(p);
  return s;
}

bool Support::contains(const Vector& y, double margin) const {
  if (y.size() != dim_ || !y.allFinite()) return false;
  if (kind_ == Kind::Box) {
    for (Eigen::Index i = 0; i < dim_; ++i) {
      if (!(y(i) > lower_(i) + margin && y(i) < upper_(i) - margin)) return false;
    }
    return true;
  }
  const Matrix a = unvech(y);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > margin;
}

std::pair<double, double> Support::bounds_1d() const {
  if (dim_ != 1) throw Error(ErrorCode::ShapeMismatch, "support is not one-dimensional");
  if (kind_ == Kind::PositiveDefiniteCone) return {0.0, kInf};
  return {lower_(0), upper_(0)};
}

std::vector<double> ExpFamModel::stat_derivatives(double, int) const {
  throw Error(ErrorCode::ShapeMismatch, name() + " does not expose scalar statistic derivatives");
}

std::vector<double> ExpFamModel::log_base_derivatives(double, int) const {
  throw Error(ErrorCode::ShapeMismatch, name() + " does not expose scalar base-measure derivatives");
}

namespace {

void check_point(const ExpFamModel& model, const Vector& x, const Vector& y) {
  if (!model.in_support(y)) {
    std::ostringstream os;
    os << model.name() << ": observation [" << y.transpose() << "] outside the open support";
    throw Error(ErrorCode::OutOfSupport, os.str());
  }
  if (!model.in_param_space(x)) {
    std::ostringstream os;
    os << model.name() << ": parameter [" << x.transpose() << "] outside the natural parameter space";
    throw Error(ErrorCode::OutOfSupport, os.str());
  }
}

}  // namespace

double eval_log_likelihood(const ExpFamModel& model, const Vector& x, const Vector& y) {
  check_point(model, x, y);
  return model.log_base_measure(y) + x.dot(model.sufficient_stat(y)) - model.log_partition(x);
}

Vector conditional_score(const ExpFamModel& model, const Vector& x, const Vector& y) {
  check_point(model, x, y);
  return model.grad_log_base_measure(y) + model.stat_jacobian(y) * x;
}

const std::vector<CatalogEntry>& model_catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"GaussianKnownVariance", {"variance"},
       "scalar Gaussian location, T(y) = y, natural parameter mean/variance"},
      {"GaussianUnknownMeanCov", {"dim"},
       "k-variate Gaussian with unknown mean and covariance, T(y) = [y, vec(y y')]"},
      {"ExponentialRate", {}, "exponential with unknown rate b, T(y) = -y, x = b"},
      {"GammaShapeRate", {}, "gamma with unknown shape and rate, T(y) = [y, log y]"},
      {"GammaKnownRate", {"rate"}, "gamma with unknown shape, T(y) = log y, x = shape - 1"},
      {"LogNormalKnownVariance", {"variance"},
       "log-normal with unknown log-mean, T(y) = log y, x = mu/variance"},
      {"Wishart", {"p"}, "p x p Wishart (p <= 2), y = vech(A), x = [-vec(V^-1)/2, (n-p-1)/2]"},
  };
  return entries;
}

ModelPtr make_model(std::string_view name, const ParamMap& params, const ModelOptions& options) {
  if (name == "GaussianKnownVariance") {
    const double variance = params.count("variance") ? require_param(params, "variance", name) : 1.0;
    return std::make_shared<GaussianKnownVariance>(variance, options);
  }
  if (name == "GaussianUnknownMeanCov") {
    const double dim = require_param(params, "dim", name);
    if (dim != std::floor(dim)) throw Error(ErrorCode::InvalidArgument, "dim must be an integer");
    return std::make_shared<GaussianUnknownMeanCov>(static_cast<Eigen::Index>(dim), options);
  }
  if (name == "ExponentialRate") return std::make_shared<ExponentialRate>(options);
  if (name == "GammaShapeRate") return std::make_shared<GammaShapeRate>(options);
  if (name == "GammaKnownRate") {
    return std::make_shared<GammaKnownRate>(require_param(params, "rate", name), options);
  }
  if (name == "LogNormalKnownVariance") {
    const double variance = params.count("variance") ? require_param(params, "variance", name) : 1.0;
    return std::make_shared<LogNormalKnownVariance>(variance, options);
  }
  if (name == "Wishart") {
    const double p = require_param(params, "p", name);
    if (p != std::floor(p)) throw Error(ErrorCode::InvalidArgument, "p must be an integer");
    return std::make_shared<Wishart>(static_cast<Eigen::Index>(p), options);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model '" + std::string(name) + "'");
}

}  // namespace tweedie
