#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "tweedie/calculus.hpp"
#include "tweedie/error.hpp"

using namespace tweedie;
using namespace tweedie::testing;

namespace {

FdPolicy with_scheme(FdScheme scheme) {
  FdPolicy p;
  p.scheme = scheme;
  return p;
}

struct Analytic {
  const char* name;
  ScalarFn f;
  ScalarFn df;
  ScalarFn d2f;
};

std::vector<Analytic> battery() {
  return {
      {"exp", [](double y) { return std::exp(y); }, [](double y) { return std::exp(y); },
       [](double y) { return std::exp(y); }},
      {"sin", [](double y) { return std::sin(y); }, [](double y) { return std::cos(y); },
       [](double y) { return -std::sin(y); }},
      {"lorentz", [](double y) { return 1.0 / (1.0 + y * y); },
       [](double y) { return -2.0 * y / std::pow(1.0 + y * y, 2); },
       [](double y) { return (6.0 * y * y - 2.0) / std::pow(1.0 + y * y, 3); }},
  };
}

}  // namespace

TEST_CASE("fd_derivative reference values") {
  CHECK(std::abs(fd_derivative([](double y) { return y * y; }, 3.0, 1, with_scheme(FdScheme::Central2)).value - 6.0) <= 1e-8);
  FdPolicy fixed = with_scheme(FdScheme::Central4);
  fixed.base_step = 1e-2;
  fixed.step_rule = StepRule::Fixed;
  CHECK(std::abs(fd_derivative([](double y) { return std::exp(y); }, 0.0, 2, fixed).value - 1.0) <= 1e-6);
  CHECK(std::abs(fd_derivative([](double y) { return std::tanh(y); }, 0.0, 1, FdPolicy{}).value - 1.0) <= 1e-8);
}

TEST_CASE("Fornberg weights reproduce the classic stencils") {
  const auto w = fornberg_weights(0.0, {-1.0, 0.0, 1.0}, 2);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(-2.0));
  CHECK(w[2] == doctest::Approx(1.0));
  const auto w4 = fornberg_weights(0.0, {-2.0, -1.0, 0.0, 1.0, 2.0}, 1);
  CHECK(w4[0] == doctest::Approx(1.0 / 12.0));
  CHECK(w4[1] == doctest::Approx(-8.0 / 12.0));
  CHECK(w4[3] == doctest::Approx(8.0 / 12.0));
  CHECK(central_offsets(1, FdScheme::Central2).size() == 3);
  CHECK(central_offsets(1, FdScheme::Central4).size() == 5);
  CHECK(central_offsets(3, FdScheme::Central4).size() == 7);
}

TEST_CASE("Richardson error estimates bound the true error") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const FdPolicy policy = with_scheme(FdScheme::Richardson);
  for (const auto& fn : battery()) {
    int violations = 0;
    for (int i = 0; i < 100; ++i) {
      const double y = u(rng);
      const FdResult r1 = fd_derivative(fn.f, y, 1, policy);
      const FdResult r2 = fd_derivative(fn.f, y, 2, policy);
      REQUIRE(std::isfinite(r1.error));
      violations += std::abs(r1.value - fn.df(y)) > 5.0 * r1.error;
      violations += std::abs(r2.value - fn.d2f(y)) > 5.0 * r2.error;
    }
    CAPTURE(fn.name);
    CHECK(violations == 0);
  }
}

TEST_CASE("Richardson beats central-2 on a smooth function") {
  const auto f = [](double y) { return std::sin(y) * std::exp(0.3 * y); };
  const auto df = [](double y) { return std::exp(0.3 * y) * (std::cos(y) + 0.3 * std::sin(y)); };
  std::vector<double> c2, ri;
  for (double y = -2.0; y <= 2.0; y += 0.25) {
    c2.push_back(std::abs(fd_derivative(f, y, 1, with_scheme(FdScheme::Central2)).value - df(y)));
    ri.push_back(std::abs(fd_derivative(f, y, 1, with_scheme(FdScheme::Richardson)).value - df(y)));
  }
  std::sort(c2.begin(), c2.end());
  std::sort(ri.begin(), ri.end());
  CHECK(ri[ri.size() / 2] <= c2[c2.size() / 2]);
}

TEST_CASE("stencils shrink to fit the domain, then refuse") {
  const Interval pos{0.0, std::numeric_limits<double>::infinity(), 1e-8};
  const auto f = [](double y) { return std::log(y); };
  CHECK(fd_derivative(f, 0.5, 1, FdPolicy{}, pos).value == doctest::Approx(2.0).epsilon(1e-6));
  // the default stencil reaches 0.02; at 0.015 it must shrink
  CHECK(fd_derivative(f, 0.015, 1, FdPolicy{}, pos).value == doctest::Approx(1.0 / 0.015).epsilon(1e-2));
  try {
    fd_derivative(f, 1e-6, 1, FdPolicy{}, pos);
    FAIL("stencil accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StencilOutOfSupport);
  }
}

TEST_CASE("policy validation and parsing") {
  FdPolicy bad;
  bad.base_step = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = FdPolicy{};
  bad.sing_margin = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(parse_fd_scheme("richardson") == FdScheme::Richardson);
  CHECK(parse_fd_scheme("central2") == FdScheme::Central2);
  CHECK_THROWS_AS(parse_fd_scheme("central6"), Error);
  CHECK(parse_step_rule("fixed") == StepRule::Fixed);
  CHECK(parse_fd_scheme(to_string(FdScheme::Central4)) == FdScheme::Central4);
}

TEST_CASE("jacobian_fd") {
  Matrix a(2, 3);
  a << 1.0, -2.0, 0.5, 3.0, 0.0, 4.0;
  Vector y(3);
  y << 0.3, -1.0, 2.0;
  const Matrix j = jacobian_fd([&](const Vector& v) { return Vector(a * v); }, y, FdPolicy{});
  CHECK((j - a.transpose()).cwiseAbs().maxCoeff() <= 1e-8);

  Vector p(2);
  p << 2.0, 3.0;
  const Matrix jp = jacobian_fd([](const Vector& v) { return Vector::Constant(1, v(0) * v(1)); }, p,
                                FdPolicy{});
  CHECK(std::abs(jp(0, 0) - 3.0) <= 1e-6);
  CHECK(std::abs(jp(1, 0) - 2.0) <= 1e-6);

  const Matrix h = hessian_fd([](const Vector& v) { return v(0) * v(0) * v(1) + std::sin(v(1)); }, p,
                              with_scheme(FdScheme::Richardson));
  CHECK(std::abs(h(0, 0) - 6.0) <= 1e-6);
  CHECK(std::abs(h(0, 1) - 4.0) <= 1e-6);
  CHECK(std::abs(h(1, 1) + std::sin(3.0)) <= 1e-6);
}

TEST_CASE("d_operator reference values") {
  auto g = gaussian_model();
  auto e = make_model("ExponentialRate", {});
  const auto quarter = [](double y) { return y * y / 4.0 + 7.0; };
  CHECK(std::abs(d_operator(quarter, *g, 1, 2.0, FdPolicy{}).value - 1.0) <= 1e-6);
  CHECK(d_operator(quarter, *g, 0, 2.0, FdPolicy{}).value == quarter(2.0));
  const auto lg = [](double y) { return -3.0 * std::log(1.0 + y); };
  CHECK(std::abs(d_operator(lg, *e, 1, 1.0, FdPolicy{}).value - 1.5) <= 1e-6);
}

TEST_CASE("d_operator with a linear statistic is the scaled plain derivative") {
  auto g = make_model("GaussianKnownVariance", {{"variance", 1.0}});
  auto e = make_model("ExponentialRate", {});
  const Interval pos = domain_of(*e);
  const auto f = [](double y) { return std::exp(-0.3 * y) * std::cos(y); };
  for (int ell = 1; ell <= 3; ++ell) {
    for (double y : {0.5, 1.5, 3.0}) {
      CHECK(d_operator(f, *g, ell, y, FdPolicy{}).value == fd_derivative(f, y, ell, FdPolicy{}).value);
      CHECK(d_operator(f, *e, ell, y, FdPolicy{}).value ==
            std::pow(-1.0, ell) * fd_derivative(f, y, ell, FdPolicy{}, pos).value);
    }
  }
}

TEST_CASE("d_operator with a nonlinear statistic") {
  // T = log y, so D = y d/dy; D^l y^3 = 3^l y^3
  auto ln = make_model("LogNormalKnownVariance", {{"variance", 1.0}});
  const auto cube = [](double y) { return y * y * y; };
  const FdPolicy policy = with_scheme(FdScheme::Richardson);
  for (int ell = 1; ell <= 3; ++ell) {
    for (double y : {0.7, 1.0, 2.0}) {
      const double expected = std::pow(3.0, ell) * cube(y);
      CAPTURE(ell);
      CAPTURE(y);
      CHECK(std::abs(d_operator(cube, *ln, ell, y, policy).value - expected) <=
            (ell == 1 ? 1e-6 : ell == 2 ? 1e-4 : 1e-3) * std::max(1.0, expected));
    }
  }
}

TEST_CASE("d_operator composes") {
  auto ln = make_model("GammaKnownRate", {{"rate", 1.0}});
  const FdPolicy policy = with_scheme(FdScheme::Richardson);
  const auto f = [](double y) { return std::sqrt(y) + std::sin(y); };
  for (int total = 2; total <= 3; ++total) {
    for (int inner = 1; inner < total; ++inner) {
      for (double y : {1.0, 2.5}) {
        const double whole = d_operator(f, *ln, total, y, policy).value;
        const auto g = [&](double u) { return d_operator(f, *ln, inner, u, policy).value; };
        const double nested = d_operator(g, *ln, total - inner, y, policy).value;
        const double tol = 10.0 * (total == 2 ? 1e-4 : 1e-3);
        CHECK(std::abs(whole - nested) <= tol * std::max(1.0, std::abs(whole)));
      }
    }
  }
}

TEST_CASE("d_operator refuses points where T' nearly vanishes") {
  // GammaKnownRate has T = log y, T' = 1/y; large y pushes T' under the margin
  auto gk = make_model("GammaKnownRate", {{"rate", 1.0}});
  FdPolicy policy;
  policy.sing_margin = 0.1;
  try {
    d_operator([](double y) { return y; }, *gk, 1, 20.0, policy);
    FAIL("no exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NearSingularStatistic);
  }
}

TEST_CASE("weighted antiderivative") {
  auto g = gaussian_model();
  auto e = make_model("ExponentialRate", {});
  const auto half = [](double u) { return u / 2.0; };
  CHECK(antiderivative_weighted(half, 1.3, 1.3, *g) == 0.0);
  CHECK(std::abs(antiderivative_weighted(half, 0.0, 2.0, *g) - 1.0) <= 1e-8);
  CHECK(std::abs(antiderivative_weighted([](double u) { return 3.0 / (1.0 + u); }, 0.5, 1.0, *e) -
                 (-3.0 * std::log(2.0 / 1.5))) <= 1e-8);
  // the interval must stay inside the support
  CHECK_THROWS_AS(antiderivative_weighted(half, 0.0, 1.0, *e), Error);
  // integrands that vanish near the anchor still converge promptly
  CHECK(std::abs(antiderivative_weighted(half, 0.0, 1e-3, *g) - 2.5e-7) <= 1e-12);
}

TEST_CASE("jets") {
  // exp(sin y) at y = 0.4 against closed-form derivatives
  const double y = 0.4;
  const Jet s = Jet::from_derivatives({std::sin(y), std::cos(y), -std::sin(y), -std::cos(y)});
  const Jet e = s.exp();
  const double es = std::exp(std::sin(y));
  CHECK(e.derivative(0) == doctest::Approx(es));
  CHECK(e.derivative(1) == doctest::Approx(es * std::cos(y)));
  CHECK(e.derivative(2) == doctest::Approx(es * (std::cos(y) * std::cos(y) - std::sin(y))));
  const Jet r = Jet::from_derivatives({2.0, 1.0, 0.0}).reciprocal();  // 1/(2 + t)
  CHECK(r.derivative(1) == doctest::Approx(-0.25));
  CHECK(r.derivative(2) == doctest::Approx(2.0 / 8.0));
  const Jet p = s * s;
  CHECK(p.derivative(1) == doctest::Approx(2.0 * std::sin(y) * std::cos(y)));
  CHECK(s.differentiate().derivative(0) == doctest::Approx(std::cos(y)));
  CHECK(s.differentiate().order() == 2);
  CHECK((s + s * -1.0).value() == 0.0);
}
