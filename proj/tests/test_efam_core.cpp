#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tweedie/calculus.hpp"
#include "tweedie/error.hpp"
#include "tweedie/linalg.hpp"
#include "tweedie/model.hpp"
#include "tweedie/quadrature.hpp"

using namespace tweedie;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Vector vecof(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

struct Case {
  ModelPtr model;
  std::vector<Vector> params;  // natural parameters
  std::vector<Vector> points;  // interior observations
};

std::vector<Case> catalog_cases() {
  std::vector<Case> cases;
  {
    auto m = make_model("GaussianKnownVariance", {{"variance", 2.0}});
    cases.push_back({m, {obs(-1.0), obs(0.0), obs(0.3), obs(1.2), obs(2.5)},
                     {obs(-2.0), obs(-0.4), obs(0.0), obs(1.1), obs(3.0)}});
  }
  {
    auto m = make_model("ExponentialRate", {});
    cases.push_back({m, {obs(0.5), obs(1.0), obs(1.7), obs(2.5), obs(4.0)},
                     {obs(0.1), obs(0.5), obs(1.0), obs(2.0), obs(4.5)}});
  }
  {
    auto m = make_model("GammaKnownRate", {{"rate", 1.5}});
    cases.push_back({m, {obs(0.2), obs(1.0), obs(1.5), obs(2.5), obs(4.0)},
                     {obs(0.2), obs(0.8), obs(1.5), obs(3.0), obs(5.0)}});
  }
  {
    auto m = make_model("LogNormalKnownVariance", {{"variance", 0.5}});
    cases.push_back({m, {obs(-1.0), obs(0.0), obs(0.4), obs(1.0), obs(2.0)},
                     {obs(0.3), obs(0.9), obs(1.4), obs(2.2), obs(4.0)}});
  }
  {
    auto m = make_model("GammaShapeRate", {});
    std::vector<Vector> xs;
    for (auto [a, b] : {std::pair{2.0, 1.0}, {1.5, 0.5}, {3.0, 2.0}, {4.0, 1.0}, {2.5, 3.0}}) {
      xs.push_back(m->natural_from_source(vecof({a, b})));
    }
    cases.push_back({m, xs, {obs(0.3), obs(1.0), obs(2.0), obs(3.5), obs(6.0)}});
  }
  {
    auto m = make_model("Wishart", {{"p", 1}});
    std::vector<Vector> xs;
    for (auto [v, n] : {std::pair{1.0, 3.0}, {2.0, 5.0}, {0.5, 4.0}, {1.5, 2.5}, {0.8, 6.0}}) {
      xs.push_back(m->natural_from_source(vecof({v, n})));
    }
    cases.push_back({m, xs, {obs(0.5), obs(1.0), obs(2.5), obs(4.0), obs(7.0)}});
  }
  {
    auto m = make_model("GaussianUnknownMeanCov", {{"dim", 2}});
    std::vector<Vector> xs = {m->natural_from_source(vecof({0.0, 0.0, 1.0, 0.0, 0.0, 1.0})),
                              m->natural_from_source(vecof({1.0, -0.5, 1.5, 0.3, 0.3, 0.8})),
                              m->natural_from_source(vecof({-0.8, 0.6, 0.7, -0.2, -0.2, 1.2}))};
    cases.push_back({m, xs, {vecof({0.0, 0.0}), vecof({-1.0, 0.5}), vecof({1.5, 1.0})}});
  }
  {
    auto m = make_model("Wishart", {{"p", 2}});
    std::vector<Vector> xs = {m->natural_from_source(vecof({1.0, 0.2, 0.2, 1.0, 4.0})),
                              m->natural_from_source(vecof({2.0, -0.3, -0.3, 1.5, 5.0}))};
    cases.push_back({m, xs, {vecof({2.0, 0.3, 2.0}), vecof({1.5, -0.2, 1.8}), vecof({4.0, 1.0, 3.0})}});
  }
  return cases;
}

double integrate_density_1d(const ExpFamModel& m, const Vector& x) {
  const auto [lo, hi] = m.support().bounds_1d();
  const double center = m.observation_mean(x)(0);
  const auto density = [&](double y) {
    return m.in_support(obs(y)) ? std::exp(eval_log_likelihood(m, x, obs(y))) : 0.0;
  };
  return integrate_interval(density, lo, hi, center, 1e-11)
      .value;
}

}  // namespace

TEST_CASE("vec, vech and their operators") {
  const Matrix a = mat({{1, 2}, {3, 4}});
  CHECK(vec(a) == vecof({1, 3, 2, 4}));
  CHECK(vech(mat({{1, 2}, {2, 5}})) == vecof({1, 2, 5}));
  CHECK(vec(Matrix::Identity(2, 2)) == vecof({1, 0, 0, 1}));
  CHECK(unvec(vec(a), 2) == a);
  CHECK_THROWS_AS(vech(a), Error);

  const auto ops1 = vech_operators(1);
  CHECK(ops1.duplication == Matrix::Ones(1, 1));
  CHECK(ops1.elimination == Matrix::Ones(1, 1));

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> d(-9, 9);
  for (Eigen::Index n = 1; n <= 3; ++n) {
    const auto ops = vech_operators(n);
    for (int rep = 0; rep < 5; ++rep) {
      Matrix s(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) s(i, j) = s(j, i) = d(rng);
      }
      CHECK((ops.duplication * vech(s) - vec(s)).cwiseAbs().maxCoeff() == 0.0);
      CHECK((ops.elimination * vec(s) - vech(s)).cwiseAbs().maxCoeff() == 0.0);
      CHECK(unvech(vech(s)) == s);
    }
  }
  CHECK(vech_size(3) == 6);
  CHECK(matrix_dim_from_vech_size(6) == 3);
  CHECK_THROWS_AS(matrix_dim_from_vech_size(5), Error);
  CHECK(kronecker(Matrix::Identity(2, 2), mat({{1, 2}})) == mat({{1, 2, 0, 0}, {0, 0, 1, 2}}));
}

TEST_CASE("log-likelihood reference values") {
  auto g = make_model("GaussianKnownVariance", {{"variance", 1.0}});
  CHECK(eval_log_likelihood(*g, obs(0.0), obs(0.0)) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
  CHECK(eval_log_likelihood(*g, obs(0.0), obs(0.0)) == doctest::Approx(-0.9189).epsilon(1e-4));

  auto e = make_model("ExponentialRate", {});
  CHECK(eval_log_likelihood(*e, obs(1.0), obs(1.0)) == doctest::Approx(-1.0).epsilon(1e-14));

  auto gsr = make_model("GammaShapeRate", {});
  const Vector x = gsr->natural_from_source(vecof({2.0, 1.0}));
  CHECK(eval_log_likelihood(*gsr, x, obs(1.0)) == doctest::Approx(-1.0).epsilon(1e-12));

  CHECK_THROWS_AS(eval_log_likelihood(*e, obs(1.0), obs(-1.0)), Error);
  CHECK_THROWS_AS(eval_log_likelihood(*e, obs(-1.0), obs(1.0)), Error);
  try {
    eval_log_likelihood(*e, obs(1.0), obs(0.0));
    FAIL("boundary accepted");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::OutOfSupport);
  }
}

TEST_CASE("conditional score reference values") {
  auto g = make_model("GaussianKnownVariance", {{"variance", 1.0}});
  CHECK(conditional_score(*g, obs(0.5), obs(2.0))(0) == doctest::Approx(-1.5).epsilon(1e-14));
  for (double y : {-1.0, 0.3, 2.0}) {
    CHECK(conditional_score(*g, obs(0.0), obs(y))(0) ==
          doctest::Approx(g->grad_log_base_measure(obs(y))(0)));
  }
  auto e = make_model("ExponentialRate", {});
  for (double y : {0.1, 1.0, 7.0}) {
    CHECK(conditional_score(*e, obs(2.5), obs(y))(0) == doctest::Approx(-2.5).epsilon(1e-14));
  }
}

TEST_CASE("catalog densities integrate to one") {
  for (const auto& c : catalog_cases()) {
    const ExpFamModel& m = *c.model;
    if (m.dim_obs() != 1) continue;
    for (const auto& x : c.params) {
      CAPTURE(m.name());
      CAPTURE(x.transpose());
      CHECK(std::abs(integrate_density_1d(m, x) - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("bivariate Gaussian density integrates to one") {
  auto m = make_model("GaussianUnknownMeanCov", {{"dim", 2}});
  const Vector x = m->natural_from_source(vecof({0.4, -0.3, 1.2, 0.35, 0.35, 0.9}));
  const auto rule = gauss_legendre(160, -12.0, 12.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      total += rule.weights[i] * rule.weights[j] *
               std::exp(eval_log_likelihood(*m, x, vecof({rule.nodes[i], rule.nodes[j]})));
    }
  }
  CHECK(std::abs(total - 1.0) <= 1e-6);
}

TEST_CASE("2x2 Wishart density integrates to one") {
  auto m = make_model("Wishart", {{"p", 2}});
  const Vector x = m->natural_from_source(vecof({1.0, 0.2, 0.2, 0.8, 5.0}));
  // A = [[a, b], [b, c]] with b = s sqrt(a c), s in (-1, 1)
  const auto s_rule = gauss_legendre(48, -1.0, 1.0);
  const auto inner = [&](double a, double c) {
    double v = 0.0;
    const double r = std::sqrt(a * c);
    for (std::size_t k = 0; k < s_rule.nodes.size(); ++k) {
      const Vector y = vecof({a, s_rule.nodes[k] * r, c});
      if (!m->in_support(y)) continue;
      v += s_rule.weights[k] * r * std::exp(eval_log_likelihood(*m, x, y));
    }
    return v;
  };
  // a = e^u, c = e^v so that both tails are covered by a finite rule
  const auto log_rule = gauss_legendre(160, -25.0, 5.0);
  double total = 0.0;
  for (std::size_t i = 0; i < log_rule.nodes.size(); ++i) {
    const double a = std::exp(log_rule.nodes[i]);
    for (std::size_t j = 0; j < log_rule.nodes.size(); ++j) {
      const double c = std::exp(log_rule.nodes[j]);
      total += log_rule.weights[i] * log_rule.weights[j] * a * c * inner(a, c);
    }
  }
  CHECK(std::abs(total - 1.0) <= 1e-6);
}

TEST_CASE("score and statistic Jacobian match finite differences") {
  FdPolicy policy;
  policy.scheme = FdScheme::Richardson;
  for (const auto& c : catalog_cases()) {
    const ExpFamModel& m = *c.model;
    const DomainFn inside = [&](const Vector& y) { return m.in_support(y); };
    for (const auto& y : c.points) {
      CAPTURE(m.name());
      CAPTURE(y.transpose());
      const Matrix jt = m.stat_jacobian(y);
      const Matrix fd = jacobian_fd([&](const Vector& u) { return m.sufficient_stat(u); }, y,
                                    policy, inside);
      CHECK((jt - fd).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, jt.cwiseAbs().maxCoeff()));
      for (const auto& x : c.params) {
        const Vector score = conditional_score(m, x, y);
        const Matrix g = jacobian_fd(
            [&](const Vector& u) { return obs(eval_log_likelihood(m, x, u)); }, y, policy, inside);
        CHECK((score - g.col(0)).cwiseAbs().maxCoeff() <=
              1e-6 * std::max(1.0, score.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("bivariate Gaussian statistic Jacobian has the Kronecker form") {
  auto m = make_model("GaussianUnknownMeanCov", {{"dim", 2}});
  const Vector y = vecof({0.7, -1.3});
  Matrix expected(2, 6);
  expected.leftCols(2) = Matrix::Identity(2, 2);
  const Matrix i2 = Matrix::Identity(2, 2);
  expected.rightCols(4) = kronecker(y.transpose(), i2) + kronecker(i2, y.transpose());
  CHECK((m->stat_jacobian(y) - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("scalar derivative lists agree with the closed forms") {
  for (const auto& c : catalog_cases()) {
    const ExpFamModel& m = *c.model;
    if (!m.is_scalar() || m.max_derivative_order() < 2) continue;
    FdPolicy policy;
    policy.scheme = FdScheme::Richardson;
    const Interval dom = domain_of(m);
    for (const auto& yv : c.points) {
      const double y = yv(0);
      const auto t = m.stat_derivatives(y, 2);
      const auto lh = m.log_base_derivatives(y, 2);
      CHECK(t[0] == doctest::Approx(m.sufficient_stat(yv)(0)).epsilon(1e-14));
      CHECK(lh[0] == doctest::Approx(m.log_base_measure(yv)).epsilon(1e-14));
      const auto tf = [&](double u) { return m.sufficient_stat(obs(u))(0); };
      const auto hf = [&](double u) { return m.log_base_measure(obs(u)); };
      CHECK(t[1] == doctest::Approx(fd_derivative(tf, y, 1, policy, dom).value).epsilon(1e-7));
      CHECK(t[2] == doctest::Approx(fd_derivative(tf, y, 2, policy, dom).value).epsilon(1e-5));
      CHECK(lh[1] == doctest::Approx(fd_derivative(hf, y, 1, policy, dom).value).epsilon(1e-7));
      CHECK(lh[2] == doctest::Approx(fd_derivative(hf, y, 2, policy, dom).value).epsilon(1e-5));
    }
  }
}

TEST_CASE("Wishart p = 1 reduces to a gamma law with the log-det gradient 1/y") {
  auto w = make_model("Wishart", {{"p", 1}});
  const Matrix j = w->stat_jacobian(obs(2.0));
  REQUIRE(j.rows() == 1);
  CHECK(j(0, 0) == doctest::Approx(1.0));
  CHECK(j(0, 1) == doctest::Approx(0.5));

  ModelOptions printed;
  printed.printed_logdet_gradient = true;
  auto wp = make_model("Wishart", {{"p", 1}}, printed);
  CHECK(wp->stat_jacobian(obs(2.0))(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("catalog construction errors") {
  CHECK_THROWS_AS(make_model("NoSuchModel", {}), Error);
  CHECK_THROWS_AS(make_model("Wishart", {{"p", 3}}), Error);
  CHECK_THROWS_AS(make_model("GaussianKnownVariance", {{"variance", -1.0}}), Error);
  CHECK(model_catalog().size() >= 5);
}
