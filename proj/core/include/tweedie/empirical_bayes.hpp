#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tweedie/engine.hpp"
#include "tweedie/measures.hpp"

namespace tweedie {

/// Smooth estimate of the marginal density f_Y with derivatives.
class DensityEstimate {
 public:
  virtual ~DensityEstimate() = default;
  /// [f(y), f'(y), ..., f^(order)(y)].
  virtual std::vector<double> derivatives(double y, int order) const = 0;
  double density(double y) const { return derivatives(y, 0)[0]; }
};

/// Gaussian-kernel estimate renormalized to unit mass on the clamp interval.
class KernelDensityEstimate final : public DensityEstimate {
 public:
  KernelDensityEstimate(std::vector<double> samples, double bandwidth, double lo, double hi);

  std::vector<double> derivatives(double y, int order) const override;

  std::size_t sample_count() const { return samples_.size(); }
  double bandwidth() const { return bandwidth_; }
  double clamp_lo() const { return lo_; }
  double clamp_hi() const { return hi_; }
  /// Fraction of kernel mass inside the clamp (the renormalization constant).
  double clamp_mass() const { return mass_; }

 private:
  std::vector<double> samples_;  // sorted
  double bandwidth_;
  double lo_;
  double hi_;
  double mass_ = 1.0;
};

/// 1.06 * sd * n^(-1/5). Throws DegenerateSample when n < 2 or sd = 0.
double silverman_bandwidth(const std::vector<double>& samples);

/// Fits a KDE; the bandwidth defaults to Silverman's rule.
KernelDensityEstimate kde_fit(std::vector<double> samples, std::optional<double> bandwidth = {},
                              double lo = -std::numeric_limits<double>::infinity(),
                              double hi = std::numeric_limits<double>::infinity());

/// The exact marginal of a scalar scenario exposed as a DensityEstimate;
/// derivatives are analytic (Taylor jets of the atom mixture).
class ExactMarginalDensity final : public DensityEstimate {
 public:
  explicit ExactMarginalDensity(std::shared_ptr<const Scenario> scenario);
  std::vector<double> derivatives(double y, int order) const override;

 private:
  std::shared_ptr<const Scenario> scenario_;
};

struct EbOptions {
  double density_floor = 1e-8;
  double sing_margin = 1e-4;
};

/// E[X^ell | Y = y] from the marginal alone: (h/f) D^(ell) (f/h), with the
/// estimate in place of f. Throws LowDensity below the density floor and
/// NearSingularStatistic where |T'| is within the margin.
double eb_posterior_moment(const DensityEstimate& estimate, const ExpFamModel& model, int ell,
                           double y, const EbOptions& options = {});

/// n draws of Y: an atom of the discretized prior, then Y | X from the model.
std::vector<double> draw_marginal_samples(const Scenario& scenario, std::size_t n,
                                          std::uint64_t seed);

struct EbEllResult {
  int ell = 1;
  double mae_kde = 0.0;
  double mae_exact_marginal = 0.0;
  std::size_t failed_points = 0;
};

struct EbReport {
  std::string scenario;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double bandwidth = 0.0;
  std::vector<EbEllResult> per_ell;

  std::string to_json() const;
};

/// Compares KDE-based and exact-marginal eb_posterior_moment against the
/// conditional_moment oracle on the grid, for ell = 1..ell_max.
EbReport eb_benchmark(const Scenario& scenario, std::size_t n, const Grid& grid, int ell_max,
                      std::uint64_t seed, std::optional<double> bandwidth = {},
                      const EbOptions& options = {});

}  // namespace tweedie
