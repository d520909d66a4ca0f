#include "tweedie/empirical_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <sstream>

#include "tweedie/calculus.hpp"
#include "tweedie/error.hpp"
#include "tweedie/parallel.hpp"

namespace tweedie {

namespace {

constexpr double kKernelCutoff = 12.0;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

// ---------------------------------------------------------------------------
// KDE

double silverman_bandwidth(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) {
    throw Error(ErrorCode::DegenerateSample,
                "kernel density estimate needs at least 2 samples, got " + std::to_string(n));
  }
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw Error(ErrorCode::DegenerateSample, "samples have zero spread");
  return 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
}

KernelDensityEstimate::KernelDensityEstimate(std::vector<double> samples, double bandwidth,
                                             double lo, double hi)
    : samples_(std::move(samples)), bandwidth_(bandwidth), lo_(lo), hi_(hi) {
  if (samples_.size() < 2) {
    throw Error(ErrorCode::DegenerateSample,
                "kernel density estimate needs at least 2 samples, got " +
                    std::to_string(samples_.size()));
  }
  for (double s : samples_) {
    if (!std::isfinite(s)) throw Error(ErrorCode::InvalidArgument, "non-finite sample");
  }
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
    throw Error(ErrorCode::InvalidArgument, "bandwidth must be finite and > 0");
  }
  if (!(hi_ > lo_)) throw Error(ErrorCode::InvalidArgument, "empty clamp interval");
  std::sort(samples_.begin(), samples_.end());
  double mass = 0.0;
  for (double s : samples_) {
    mass += normal_cdf((hi_ - s) / bandwidth_) - normal_cdf((lo_ - s) / bandwidth_);
  }
  mass_ = mass / static_cast<double>(samples_.size());
  if (!(mass_ > 0.0)) throw Error(ErrorCode::DegenerateSample, "no kernel mass inside the clamp");
}

std::vector<double> KernelDensityEstimate::derivatives(double y, int order) const {
  if (order < 0) throw Error(ErrorCode::InvalidArgument, "derivative order must be >= 0");
  std::vector<double> d(order + 1, 0.0);
  if (!(y >= lo_ && y <= hi_)) return d;
  const double b = bandwidth_;
  const auto first = std::lower_bound(samples_.begin(), samples_.end(), y - kKernelCutoff * b);
  const auto last = std::upper_bound(samples_.begin(), samples_.end(), y + kKernelCutoff * b);
  std::vector<double> he(order + 1);
  for (auto it = first; it != last; ++it) {
    const double z = (y - *it) / b;
    const double phi = std::exp(-0.5 * z * z);
    // probabilists' Hermite polynomials: phi^(r)(z) = (-1)^r He_r(z) phi(z)
    he[0] = 1.0;
    if (order >= 1) he[1] = z;
    for (int r = 1; r < order; ++r) he[r + 1] = z * he[r] - r * he[r - 1];
    for (int r = 0; r <= order; ++r) d[r] += (r % 2 ? -he[r] : he[r]) * phi;
  }
  const double norm = 1.0 / (static_cast<double>(samples_.size()) * b * mass_ *
                             std::sqrt(2.0 * std::numbers::pi));
  double scale = norm;
  for (int r = 0; r <= order; ++r) {
    d[r] *= scale;
    scale /= b;
  }
  return d;
}

KernelDensityEstimate kde_fit(std::vector<double> samples, std::optional<double> bandwidth,
                              double lo, double hi) {
  const double b = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  return KernelDensityEstimate(std::move(samples), b, lo, hi);
}

// ---------------------------------------------------------------------------
// Exact marginal

ExactMarginalDensity::ExactMarginalDensity(std::shared_ptr<const Scenario> scenario)
    : scenario_(std::move(scenario)) {
  const ExpFamModel& m = scenario_->model();
  if (!m.is_scalar() || m.max_derivative_order() < 1) {
    throw Error(ErrorCode::ShapeMismatch, "exact marginal density needs a scalar model");
  }
}

std::vector<double> ExactMarginalDensity::derivatives(double y, int order) const {
  const ExpFamModel& m = scenario_->model();
  if (!m.in_support(obs(y))) {
    std::ostringstream os;
    os << "y = " << y << " outside the support of " << m.name();
    throw Error(ErrorCode::OutOfSupport, os.str());
  }
  const Jet log_h = Jet::from_derivatives(m.log_base_derivatives(y, order));
  const Jet t = Jet::from_derivatives(m.stat_derivatives(y, order));
  const auto& atoms = scenario_->prior_atoms();
  const auto phi = scenario_->atom_log_partition();
  // f = sum_i w_i exp(log h + x_i T - phi_i); factor out the largest exponent
  std::vector<double> c(atoms.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    c[i] = atoms.weight(i) > 0.0 ? std::log(atoms.weight(i)) + atoms.point(i)(0) * t.value() - phi[i]
                                 : -std::numeric_limits<double>::infinity();
    top = std::max(top, c[i]);
  }
  Jet sum = Jet::constant(0.0, order);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!std::isfinite(c[i])) continue;
    std::vector<double> e = (t * atoms.point(i)(0)).coefficients();
    e[0] = c[i] - top;
    sum = sum + Jet(std::move(e)).exp();
  }
  std::vector<double> shift = log_h.coefficients();
  shift[0] += top;
  const Jet f = sum * Jet(std::move(shift)).exp();
  std::vector<double> d(order + 1);
  for (int r = 0; r <= order; ++r) d[r] = f.derivative(r);
  return d;
}

// ---------------------------------------------------------------------------
// Posterior moments from the marginal

double eb_posterior_moment(const DensityEstimate& estimate, const ExpFamModel& model, int ell,
                           double y, const EbOptions& options) {
  if (!model.is_scalar() || model.max_derivative_order() < ell) {
    throw Error(ErrorCode::ShapeMismatch, "eb_posterior_moment needs a scalar model");
  }
  if (ell < 1 || ell > kMaxMomentOrder) {
    throw Error(ErrorCode::InvalidArgument, "eb_posterior_moment: order outside [1, 6]");
  }
  const std::vector<double> t_derivs = model.stat_derivatives(y, ell);
  if (!(std::abs(t_derivs[1]) > options.sing_margin)) {
    std::ostringstream os;
    os << "|T'(" << y << ")| within the singularity margin";
    throw Error(ErrorCode::NearSingularStatistic, os.str());
  }
  const std::vector<double> f_derivs = estimate.derivatives(y, ell);
  if (!(f_derivs[0] > options.density_floor)) {
    std::ostringstream os;
    os << "estimated density " << f_derivs[0] << " at y = " << y << " is below the floor "
       << options.density_floor;
    throw Error(ErrorCode::LowDensity, os.str());
  }
  // q = f / h, scaled by h(y) so that q(y) = f(y)
  std::vector<double> neg_log_h = model.log_base_derivatives(y, ell);
  for (double& v : neg_log_h) v = -v;
  neg_log_h[0] = 0.0;
  Jet g = Jet::from_derivatives(f_derivs) * Jet::from_derivatives(neg_log_h).exp();
  const double q0 = g.value();
  const Jet inv_tp =
      Jet::from_derivatives(std::vector<double>(t_derivs.begin() + 1, t_derivs.end())).reciprocal();
  for (int k = 0; k < ell; ++k) g = inv_tp * g.differentiate();
  return g.value() / q0;
}

// ---------------------------------------------------------------------------
// Benchmark

std::vector<double> draw_marginal_samples(const Scenario& scenario, std::size_t n,
                                          std::uint64_t seed) {
  const auto& atoms = scenario.prior_atoms();
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(atoms.weights().begin(), atoms.weights().end());
  std::vector<double> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    samples[i] = scenario.model().sample(atoms.point(pick(rng)), rng)(0);
  }
  return samples;
}

EbReport eb_benchmark(const Scenario& scenario, std::size_t n, const Grid& grid, int ell_max,
                      std::uint64_t seed, std::optional<double> bandwidth,
                      const EbOptions& options) {
  const ExpFamModel& model = scenario.model();
  if (!model.is_scalar() || model.max_derivative_order() < 1) {
    throw Error(ErrorCode::ShapeMismatch, "eb_benchmark needs a scalar scenario");
  }
  if (ell_max < 1 || ell_max > kMaxMomentOrder) {
    throw Error(ErrorCode::InvalidArgument, "ell_max must be in [1, 6]");
  }
  grid.validate(model);
  const auto [lo, hi] = model.support().bounds_1d();
  const KernelDensityEstimate kde = kde_fit(draw_marginal_samples(scenario, n, seed), bandwidth, lo, hi);
  const ExactMarginalDensity exact(std::make_shared<const Scenario>(scenario));

  EbReport report{scenario.name(), n, seed, kde.bandwidth(), {}};
  for (int ell = 1; ell <= ell_max; ++ell) {
    std::vector<double> err_kde(grid.size(), 0.0);
    std::vector<double> err_exact(grid.size(), 0.0);
    std::vector<char> failed(grid.size(), 0);
    parallel_for(grid.size(), [&](std::size_t i) {
      const double y = grid[i](0);
      try {
        const double oracle = conditional_moment(scenario, ell, y);
        err_kde[i] = std::abs(eb_posterior_moment(kde, model, ell, y, options) - oracle);
        err_exact[i] = std::abs(eb_posterior_moment(exact, model, ell, y, options) - oracle);
      } catch (const Error&) {
        failed[i] = 1;
      }
    });
    EbEllResult r;
    r.ell = ell;
    std::size_t used = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (failed[i]) {
        ++r.failed_points;
        continue;
      }
      r.mae_kde += err_kde[i];
      r.mae_exact_marginal += err_exact[i];
      ++used;
    }
    if (used == 0) {
      r.mae_kde = r.mae_exact_marginal = std::numeric_limits<double>::quiet_NaN();
    } else {
      r.mae_kde /= static_cast<double>(used);
      r.mae_exact_marginal /= static_cast<double>(used);
    }
    report.per_ell.push_back(r);
  }
  return report;
}

std::string EbReport::to_json() const {
  auto number = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["scenario"] = scenario;
  j["n"] = n;
  j["seed"] = seed;
  j["bandwidth"] = bandwidth;
  j["per_ell"] = nlohmann::json::array();
  for (const auto& r : per_ell) {
    j["per_ell"].push_back({{"ell", r.ell},
                            {"mae_kde", number(r.mae_kde)},
                            {"mae_exact_marginal", number(r.mae_exact_marginal)},
                            {"failed_points", r.failed_points}});
  }
  return j.dump(2) + "\n";
}

}  // namespace tweedie
