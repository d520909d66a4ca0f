#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"
#include "tweedie/calculus.hpp"
#include "tweedie/error.hpp"
#include "tweedie/quadrature.hpp"

using namespace tweedie;
using namespace tweedie::testing;

namespace {

Vector ident(const Vector& x) { return x; }

double sum_weights(const WeightedMeasure& m) {
  double s = 0.0;
  for (double w : m.weights()) s += w;
  return s;
}

}  // namespace

TEST_CASE("discretize passes discrete priors through") {
  const WeightedMeasure prior({obs(-1.0), obs(1.0)}, {0.5, 0.5});
  const WeightedMeasure d = discretize(prior);
  REQUIRE(d.size() == 2);
  CHECK(d.point(0)(0) == -1.0);
  CHECK(d.weight(1) == 0.5);
  CHECK(discretized_mass(prior) == 1.0);
}

TEST_CASE("discretize a standard normal on 64 nodes") {
  const WeightedMeasure d = discretize(ContinuousPrior{{normal_density(0.0, 1.0, -8.0, 8.0)}, 64});
  CHECK(std::abs(sum_weights(d) - 1.0) <= 1e-12);
  CHECK(std::abs(expect(d, ident)(0)) <= 1e-8);
  CHECK(std::abs(discretized_mass(ContinuousPrior{{normal_density(0.0, 1.0)}, 64}) - 1.0) <= 1e-10);
}

TEST_CASE("discretize Gamma(2, 1) on (0, 30] with 128 nodes") {
  const WeightedMeasure d = discretize(ContinuousPrior{{gamma_density(2.0, 1.0, 0.0, 30.0)}, 128});
  CHECK(std::abs(expect(d, ident)(0) - 2.0) <= 1e-6);
}

TEST_CASE("tensor discretization of a product prior") {
  const ContinuousPrior p{{normal_density(1.0, 0.5), uniform_density(-1.0, 3.0)}, 24};
  const WeightedMeasure d = discretize(p);
  CHECK(d.size() == 24 * 24);
  CHECK(d.dim() == 2);
  const Vector m = expect(d, ident);
  CHECK(m(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(m(1) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(cov(d, ident, ident)(1, 1) == doctest::Approx(16.0 / 12.0).epsilon(1e-10));
}

TEST_CASE("weighted measure validation") {
  CHECK_THROWS_AS(WeightedMeasure({obs(0.0)}, {0.0}), Error);
  CHECK_THROWS_AS(WeightedMeasure({obs(0.0)}, {-1.0}), Error);
  CHECK_THROWS_AS(WeightedMeasure({obs(0.0), obs(1.0)}, {1.0}), Error);
  CHECK_THROWS_AS(WeightedMeasure(std::vector<Vector>{}, std::vector<double>{}), Error);
  const WeightedMeasure raw({obs(0.0), obs(1.0)}, {2.0, 6.0}, false);
  CHECK(raw.total_mass() == 8.0);
  const WeightedMeasure norm({obs(0.0), obs(1.0)}, {2.0, 6.0});
  CHECK(norm.weight(1) == doctest::Approx(0.75));
}

TEST_CASE("two-point posterior weights") {
  auto s = two_point();
  const WeightedMeasure p0 = posterior(*s, obs(0.0));
  CHECK(p0.weight(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p0.weight(1) == doctest::Approx(0.5).epsilon(1e-14));
  for (double y : {-2.0, 0.4, 1.0, 3.0}) {
    const WeightedMeasure p = posterior(*s, obs(y));
    CHECK(p.weight(1) / p.weight(0) == doctest::Approx(std::exp(2.0 * y)).epsilon(1e-12));
    CHECK(p.shared_points() == s->prior_atoms().shared_points());
  }
  CHECK(expect(p0, ident)(0) == doctest::Approx(0.0));
  CHECK(cov(p0, ident, ident)(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("gamma-exponential posterior") {
  auto s = exp_gamma();
  const WeightedMeasure p = posterior(*s, obs(1.0));
  // Gamma(3, 2): mean 3/2, variance 3/4
  CHECK(std::abs(expect(p, ident)(0) - 1.5) <= 1e-6);
  CHECK(std::abs(cov(p, ident, ident)(0, 0) - 0.75) <= 1e-6);
}

TEST_CASE("point mass measures") {
  const WeightedMeasure d = WeightedMeasure::point_mass(obs(0.7));
  const auto f = [](const Vector& x) { return Vector(x.array().square()); };
  CHECK(expect(d, f)(0) == doctest::Approx(0.49));
  CHECK(cov(d, f, ident).cwiseAbs().maxCoeff() == 0.0);
  auto s = point_mass(0.7);
  for (double y : {-3.0, 0.0, 2.0}) {
    const WeightedMeasure p = posterior(*s, obs(y));
    CHECK(p.size() == 1);
    CHECK(p.weight(0) == 1.0);
    CHECK(marginal_density(*s, obs(y)) ==
          doctest::Approx(std::exp(eval_log_likelihood(s->model(), obs(0.7), obs(y)))));
  }
}

TEST_CASE("marginal densities of the conjugate scenarios") {
  auto g = gaussian_conjugate();
  CHECK(std::abs(marginal_density(*g, obs(0.0)) - 1.0 / std::sqrt(4.0 * std::numbers::pi)) <= 1e-6);
  CHECK(std::abs(marginal_density(*g, obs(0.0)) - 0.28209) <= 1e-5);
  auto e = exp_gamma();
  CHECK(std::abs(marginal_density(*e, obs(1.0)) - 0.25) <= 1e-6);
  for (double y : {0.2, 0.9, 2.5, 5.0}) {
    CHECK(std::abs(marginal_density(*e, obs(y)) - 2.0 / std::pow(1.0 + y, 3)) <= 1e-6);
  }
  CHECK(log_marginal_density(*g, obs(1.0)) ==
        doctest::Approx(std::log(marginal_density(*g, obs(1.0)))).epsilon(1e-12));
}

TEST_CASE("posterior stays finite far in the tails") {
  auto s = two_point();
  const WeightedMeasure p = posterior(*s, obs(40.0));
  CHECK(p.weight(1) == doctest::Approx(1.0));
  CHECK(std::isfinite(log_marginal_density(*s, obs(40.0))));
  CHECK_THROWS_AS(posterior(*s, obs(std::nan(""))), Error);
}

TEST_CASE("score tower: posterior mean of the conditional score is the marginal score") {
  FdPolicy policy;
  policy.scheme = FdScheme::Richardson;
  for (const auto& s : {gaussian_conjugate(), two_point(), exp_gamma()}) {
    const Interval dom = domain_of(s->model());
    for (double y : {0.3, 1.0, 2.2}) {
      const WeightedMeasure p = posterior(*s, obs(y));
      const double lhs =
          expect(p, [&](const Vector& x) { return conditional_score(s->model(), x, obs(y)); })(0);
      const double rhs =
          fd_derivative([&](double u) { return log_marginal_density(*s, obs(u)); }, y, 1, policy, dom)
              .value;
      CAPTURE(s->name());
      CAPTURE(y);
      CHECK(std::abs(lhs - rhs) <= 1e-6);
    }
  }
}

TEST_CASE("law of total expectation over a y-quadrature") {
  for (const auto& s : {gaussian_conjugate(), two_point(), exp_gamma()}) {
    const YQuadrature q = make_y_quadrature(*s);
    const auto g = [](const Vector& x) { return Vector(x.array().square() + x.array()); };
    double lhs = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      lhs += q.weights[i] * marginal_density(*s, q.nodes[i]) *
             expect(posterior(*s, q.nodes[i]), g)(0);
    }
    const double rhs = expect(s->prior_atoms(), g)(0);
    CAPTURE(s->name());
    CHECK(std::abs(lhs - rhs) <= 1e-5);
  }
}

TEST_CASE("u-maps") {
  Vector x(2);
  x << 2.0, -3.0;
  CHECK(UMap::identity()(x) == x);
  CHECK(UMap::power(2)(x)(1) == 9.0);
  CHECK(UMap::component(1)(x).size() == 1);
  CHECK(UMap::component(1)(x)(0) == -3.0);
  Matrix a(1, 2);
  a << 1.0, 1.0;
  Vector b(1);
  b << 0.5;
  CHECK(UMap::affine(a, b)(x)(0) == -0.5);
  // (x x')^1 x = |x|^2 x
  CHECK(UMap::outer_power(1)(x)(0) == doctest::Approx(26.0));
  CHECK_THROWS_AS(UMap::component(2).validate(2), Error);
  CHECK_THROWS_AS(UMap::affine(Matrix::Ones(1, 3), b).validate(2), Error);
  CHECK_THROWS_AS(UMap::power(-1), Error);
  CHECK(UMap::component(1).describe() == "component(1)");
}

TEST_CASE("scenario construction checks the prior against the model") {
  auto e = make_model("ExponentialRate", {});
  CHECK_THROWS_AS(Scenario("bad", e, WeightedMeasure({obs(-1.0)}, {1.0})), Error);
  CHECK_THROWS_AS(Scenario("bad", e, WeightedMeasure({Vector::Ones(2)}, {1.0})), Error);
  CHECK_THROWS_AS(Scenario("bad", gaussian_model(), WeightedMeasure({obs(0.0)}, {1.0}),
                           UMap::component(3)),
                  Error);
}
