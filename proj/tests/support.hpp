#pragma once

#include <cmath>
#include <memory>

#include "tweedie/engine.hpp"
#include "tweedie/measures.hpp"
#include "tweedie/model.hpp"

namespace tweedie::testing {

inline ModelPtr gaussian_model(double variance = 1.0) {
  return make_model("GaussianKnownVariance", {{"variance", variance}});
}

/// N(0, 1) prior, unit-variance Gaussian observations.
inline std::shared_ptr<const Scenario> gaussian_conjugate(int nodes = 96) {
  return std::make_shared<const Scenario>("gaussian_conjugate", gaussian_model(),
                                          ContinuousPrior{{normal_density(0.0, 1.0)}, nodes});
}

/// Equiprobable atoms at -1 and +1, unit-variance Gaussian observations.
inline std::shared_ptr<const Scenario> two_point() {
  return std::make_shared<const Scenario>(
      "two_point", gaussian_model(), WeightedMeasure({obs(-1.0), obs(1.0)}, {0.5, 0.5}));
}

/// Gamma(2, 1) prior on the rate of exponential observations.
inline std::shared_ptr<const Scenario> exp_gamma(int nodes = 128) {
  return std::make_shared<const Scenario>("exp_gamma", make_model("ExponentialRate", {}),
                                          ContinuousPrior{{gamma_density(2.0, 1.0)}, nodes});
}

inline std::shared_ptr<const Scenario> point_mass(double x0) {
  return std::make_shared<const Scenario>("point_mass", gaussian_model(),
                                          WeightedMeasure::point_mass(obs(x0)));
}

inline double sech2(double y) {
  const double c = std::cosh(y);
  return 1.0 / (c * c);
}

}  // namespace tweedie::testing
