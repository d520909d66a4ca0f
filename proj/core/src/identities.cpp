#include "tweedie/identities.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tweedie/error.hpp"
#include "tweedie/parallel.hpp"
#include "tweedie/quadrature.hpp"

namespace tweedie {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct KindInfo {
  IdentityKind kind;
  std::string_view name;
  bool ordered;
  std::string_view description;
};

constexpr KindInfo kKinds[] = {
    {IdentityKind::JacobianGeneral, "JacobianGeneral", false,
     "J_y E[U|Y] = Cov(conditional score, U | Y)"},
    {IdentityKind::JacobianExpFam, "JacobianExpFam", false, "J_y E[U|Y] = J_y T Cov(X, U | Y)"},
    {IdentityKind::Variance, "Variance", false, "J_y E[X|Y] = J_y T Var(X | Y)"},
    {IdentityKind::MmseRepresentation, "MmseRepresentation", false,
     "E[Var(X|Y)] = E[(J_Y T)^-1 J_Y E[X|Y]]"},
    {IdentityKind::Tweedie, "Tweedie", false, "J_y T E[X|Y] = grad_y log(f_Y / h)"},
    {IdentityKind::MomentRecursion, "MomentRecursion", true,
     "F_{l+1} = F_l' / T' + F_1 F_l"},
    {IdentityKind::SolvedRecursion, "SolvedRecursion", true,
     "F_{l+1} = exp(-I) D^(l+1) exp(I), I = int_a^y T' F_1"},
    {IdentityKind::HigherOrderTweedie, "HigherOrderTweedie", true,
     "F_{l+1} = (h / f_Y) D^(l+1) (f_Y / h)"},
    {IdentityKind::CumulantPde, "CumulantPde", false, "dK/dt = (1/T') dK/dy + E[X|Y]"},
    {IdentityKind::CumulantFromCE, "CumulantFromCE", true, "kappa_l = D^(l-1) E[X|Y]"},
    {IdentityKind::CumulantRecursion, "CumulantRecursion", true,
     "kappa_{l+1} = (1/T') d kappa_l / dy"},
    {IdentityKind::CumulantFromMarginal, "CumulantFromMarginal", true,
     "kappa_l = D^(l) log(f_Y / h)"},
    {IdentityKind::ScoreTower, "ScoreTower", false, "grad log f_Y = E[conditional score | Y]"},
    {IdentityKind::LogPartitionMeanVar, "LogPartitionMeanVar", false,
     "E[T(Y)|X=x] = grad phi(x), Var(T(Y)|X=x) = Hess phi(x)"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

double max_abs_diff(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::ShapeMismatch, "identity sides have different shapes");
  }
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

double nan_max(const Matrix& m) {
  double r = kNaN;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    if (std::isfinite(v)) r = std::isfinite(r) ? std::max(r, v) : v;
  }
  return r;
}

// Scalar-model derivative orders in the finite-difference stack of each spec.
int fd_orders(const IdentitySpec& s) {
  switch (s.kind) {
    case IdentityKind::JacobianGeneral:
    case IdentityKind::JacobianExpFam:
    case IdentityKind::Variance:
    case IdentityKind::Tweedie:
    case IdentityKind::ScoreTower:
      return 1;
    case IdentityKind::MmseRepresentation:
    case IdentityKind::MomentRecursion:
    case IdentityKind::CumulantRecursion:
    case IdentityKind::CumulantPde:
    case IdentityKind::LogPartitionMeanVar:
      return 2;
    case IdentityKind::CumulantFromCE:
      return s.ell <= 2 ? 1 : s.ell - 1;
    case IdentityKind::CumulantFromMarginal:
      return s.ell;
    case IdentityKind::SolvedRecursion:
    case IdentityKind::HigherOrderTweedie:
      return s.ell + 1;
  }
  return 3;
}

}  // namespace

// ---------------------------------------------------------------------------
// Kinds and specs

const std::vector<IdentityKind>& identity_kinds() {
  static const std::vector<IdentityKind> kinds = [] {
    std::vector<IdentityKind> v;
    for (const auto& k : kKinds) v.push_back(k.kind);
    return v;
  }();
  return kinds;
}

std::string_view to_string(IdentityKind kind) noexcept {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

IdentityKind parse_identity_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown identity kind '" + std::string(name) + "'");
}

bool takes_order(IdentityKind kind) noexcept {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.ordered;
  }
  return false;
}

std::string_view describe(IdentityKind kind) noexcept {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.description;
  }
  return "";
}

std::string IdentitySpec::label() const {
  std::string s(to_string(kind));
  if (takes_order(kind)) s += "(" + std::to_string(ell) + ")";
  return s;
}

IdentitySpec parse_identity(std::string_view text) {
  const std::string t = trim(text);
  const auto open = t.find('(');
  IdentitySpec spec;
  if (open == std::string::npos) {
    spec.kind = parse_identity_kind(t);
    return spec;
  }
  if (t.back() != ')') {
    throw Error(ErrorCode::InvalidArgument, "malformed identity '" + t + "'");
  }
  spec.kind = parse_identity_kind(trim(std::string_view(t).substr(0, open)));
  if (!takes_order(spec.kind)) {
    throw Error(ErrorCode::InvalidArgument, std::string(to_string(spec.kind)) + " takes no order");
  }
  const std::string args = t.substr(open + 1, t.size() - open - 2);
  const auto comma = args.find(',');
  try {
    std::size_t used = 0;
    const std::string ell_text = trim(args.substr(0, comma));
    spec.ell = std::stoi(ell_text, &used);
    if (used != ell_text.size()) throw std::invalid_argument("trailing");
    if (comma != std::string::npos) {
      if (spec.kind != IdentityKind::SolvedRecursion) {
        throw Error(ErrorCode::InvalidArgument, "only SolvedRecursion takes an anchor");
      }
      const std::string a_text = trim(args.substr(comma + 1));
      spec.anchor = std::stod(a_text, &used);
      if (used != a_text.size()) throw std::invalid_argument("trailing");
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "malformed identity arguments in '" + t + "'");
  }
  if (spec.ell < 1) {
    throw Error(ErrorCode::InvalidArgument, "identity order must be >= 1 in '" + t + "'");
  }
  return spec;
}

namespace {

std::vector<IdentitySpec> orders_of(IdentityKind kind, int max_order) {
  int hi = max_order;
  if (kind == IdentityKind::SolvedRecursion || kind == IdentityKind::HigherOrderTweedie) {
    hi = max_order - 1;
  }
  std::vector<IdentitySpec> v;
  for (int ell = 1; ell <= hi; ++ell) v.push_back({kind, ell, std::nullopt});
  return v;
}

}  // namespace

std::vector<IdentitySpec> default_suite(int max_order) {
  if (max_order < 1 || max_order >= kMaxMomentOrder) {
    throw Error(ErrorCode::InvalidArgument,
                "max_order must be in [1, " + std::to_string(kMaxMomentOrder - 1) + "]");
  }
  std::vector<IdentitySpec> suite;
  for (IdentityKind k : identity_kinds()) {
    if (takes_order(k)) {
      for (auto& s : orders_of(k, max_order)) suite.push_back(s);
    } else {
      suite.push_back({k, 0, std::nullopt});
    }
  }
  return suite;
}

std::vector<IdentitySpec> expand_selection(std::string_view selection, int max_order) {
  const std::string sel = trim(selection);
  if (sel == "all") return default_suite(max_order);
  IdentitySpec spec = parse_identity(sel);
  if (takes_order(spec.kind) && spec.ell == 0) return orders_of(spec.kind, max_order);
  return {spec};
}

double default_tolerance(const IdentitySpec& spec) {
  if (spec.kind == IdentityKind::CumulantFromCE && spec.ell == 1) return 1e-6;
  const int orders = fd_orders(spec);
  if (orders <= 1) return 1e-6;
  if (orders == 2) return 1e-4;
  return 1e-3;
}

double Tolerances::lookup(const IdentitySpec& spec) const {
  if (auto it = overrides.find(spec.label()); it != overrides.end()) return it->second;
  if (auto it = overrides.find(std::string(to_string(spec.kind))); it != overrides.end()) {
    return it->second;
  }
  return default_tolerance(spec);
}

// ---------------------------------------------------------------------------
// Reports

std::size_t IdentityReport::failed_points() const {
  return static_cast<std::size_t>(
      std::count_if(errors.begin(), errors.end(), [](const std::string& e) { return !e.empty(); }));
}

std::size_t IdentityReport::excluded_points() const {
  return static_cast<std::size_t>(std::count(excluded.begin(), excluded.end(), true));
}

std::string IdentityReport::summary() const {
  std::ostringstream os;
  if (skipped) {
    os << "SKIP " << kind << " (" << skip_reason << ")";
    return os.str();
  }
  os.precision(3);
  os << (pass ? "PASS " : "FAIL ") << kind << " max_residual=" << max_residual
     << " tol=" << tolerance << " points=" << points.size();
  if (excluded_points() > 0) os << " excluded=" << excluded_points();
  if (failed_points() > 0) os << " errors=" << failed_points();
  return os.str();
}

// ---------------------------------------------------------------------------
// Compatibility

std::string incompatibility(const IdentitySpec& spec, const Scenario& scenario, const Grid& grid,
                            int max_order) {
  const ExpFamModel& m = scenario.model();
  if (grid.dim() != m.dim_obs()) return "grid dimension does not match the observation dimension";
  const bool scalar = m.is_scalar() && m.max_derivative_order() >= 1;
  switch (spec.kind) {
    case IdentityKind::JacobianGeneral:
    case IdentityKind::JacobianExpFam:
    case IdentityKind::Variance:
    case IdentityKind::Tweedie:
    case IdentityKind::ScoreTower:
      return {};
    case IdentityKind::MmseRepresentation:
      if (m.dim_obs() != 1 || m.dim_param() != 1) {
        return "needs scalar X and Y (J_y T must be square and the y-quadrature is 1-D)";
      }
      return {};
    case IdentityKind::LogPartitionMeanVar:
      if (m.dim_obs() != 1) return "needs a scalar observation for the y-quadrature";
      return {};
    default:
      break;
  }
  if (!scalar) return "needs scalar X and Y with T' available";
  int needed = spec.ell;
  if (spec.kind == IdentityKind::MomentRecursion || spec.kind == IdentityKind::SolvedRecursion ||
      spec.kind == IdentityKind::HigherOrderTweedie ||
      spec.kind == IdentityKind::CumulantRecursion) {
    needed = spec.ell + 1;
  }
  if (takes_order(spec.kind) && (spec.ell < 1 || needed > std::min(max_order + 1, kMaxMomentOrder))) {
    return "order outside the supported range";
  }
  if ((spec.kind == IdentityKind::SolvedRecursion || spec.kind == IdentityKind::HigherOrderTweedie) &&
      spec.ell + 1 > 5) {
    return "D-operator order above 5";
  }
  return {};
}

// ---------------------------------------------------------------------------
// Verification

namespace {

struct PointEval {
  Vector lhs;
  Vector rhs;
  double fd_error = kNaN;
};

using PointFn = std::function<PointEval(const Vector&)>;

IdentityReport run_points(const IdentitySpec& spec, const Scenario& scenario,
                          std::vector<Vector> points, double tol, const PointFn& fn) {
  IdentityReport r;
  r.kind = spec.label();
  r.scenario = scenario.name();
  r.tolerance = tol;
  const std::size_t n = points.size();
  r.points = std::move(points);
  r.lhs.assign(n, Vector());
  r.rhs.assign(n, Vector());
  r.residual.assign(n, kNaN);
  r.excluded.assign(n, false);
  r.fd_error.assign(n, kNaN);
  r.errors.assign(n, std::string());
  std::vector<char> excluded(n, 0);
  parallel_for(n, [&](std::size_t i) {
    try {
      PointEval e = fn(r.points[i]);
      r.residual[i] = max_abs_diff(e.lhs, e.rhs);
      if (!std::isfinite(r.residual[i])) {
        throw Error(ErrorCode::Overflow, "non-finite identity side");
      }
      r.lhs[i] = std::move(e.lhs);
      r.rhs[i] = std::move(e.rhs);
      r.fd_error[i] = e.fd_error;
    } catch (const Error& err) {
      r.residual[i] = kNaN;
      if (err.code() == ErrorCode::NearSingularStatistic) {
        excluded[i] = 1;
      } else {
        r.errors[i] = err.what();
      }
    }
  });
  for (std::size_t i = 0; i < n; ++i) r.excluded[i] = excluded[i] != 0;
  double worst = 0.0;
  std::size_t evaluated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (r.excluded[i] || !r.errors[i].empty()) continue;
    worst = std::max(worst, r.residual[i]);
    ++evaluated;
  }
  r.max_residual = worst;
  if (r.excluded_points() > 0) {
    r.notes.push_back(std::to_string(r.excluded_points()) +
                      " point(s) excluded: |T'| within the singularity margin");
  }
  if (evaluated == 0) r.notes.push_back("no evaluable points");
  r.pass = evaluated > 0 && r.failed_points() == 0 && worst <= tol;
  return r;
}

struct Context {
  const Scenario& s;
  const ExpFamModel& m;
  const FdPolicy& policy;
  DomainFn inside;
  Interval domain;

  Context(const Scenario& scenario, const FdPolicy& p)
      : s(scenario), m(scenario.model()), policy(p) {
    inside = [this](const Vector& y) { return m.in_support(y); };
    if (m.dim_obs() == 1) domain = domain_of(m);
  }

  Vector posterior_mean_u(const Vector& y) const { return conditional_expectation(s, y); }

  Vector posterior_mean_x(const Vector& y) const {
    return expect(posterior(s, y), [](const Vector& x) { return x; });
  }

  double log_f_over_h(double u) const {
    const Vector p = obs(u);
    return log_marginal_density(s, p) - m.log_base_measure(p);
  }

  double stat_prime(double y) const {
    const double tp = m.stat_prime(y);
    if (!(std::abs(tp) > policy.sing_margin)) {
      std::ostringstream os;
      os << "|T'(" << y << ")| within the singularity margin";
      throw Error(ErrorCode::NearSingularStatistic, os.str());
    }
    return tp;
  }
};

PointEval jacobian_point(const Context& c, const Vector& y, bool general) {
  Matrix err;
  const Matrix lhs = jacobian_fd([&](const Vector& p) { return c.posterior_mean_u(p); }, y,
                                 c.policy, c.inside, &err);
  const WeightedMeasure post = posterior(c.s, y);
  const UMap& u = c.s.u_map();
  const auto u_fn = [&u](const Vector& x) { return u(x); };
  Matrix rhs;
  if (general) {
    rhs = cov(post, [&](const Vector& x) { return conditional_score(c.m, x, y); }, u_fn);
  } else {
    rhs = c.m.stat_jacobian(y) * cov(post, [](const Vector& x) { return x; }, u_fn);
  }
  return {flatten(lhs), flatten(rhs), nan_max(err)};
}

PointEval variance_point(const Context& c, const Vector& y) {
  Matrix err;
  const Matrix lhs = jacobian_fd([&](const Vector& p) { return c.posterior_mean_x(p); }, y,
                                 c.policy, c.inside, &err);
  const auto id = [](const Vector& x) { return x; };
  const Matrix rhs = c.m.stat_jacobian(y) * cov(posterior(c.s, y), id, id);
  return {flatten(lhs), flatten(rhs), nan_max(err)};
}

PointEval tweedie_point(const Context& c, const Vector& y) {
  const Vector lhs = c.m.stat_jacobian(y) * c.posterior_mean_x(y);
  Matrix err;
  const Matrix grad = jacobian_fd(
      [&](const Vector& p) {
        return Vector::Constant(1, log_marginal_density(c.s, p) - c.m.log_base_measure(p));
      },
      y, c.policy, c.inside, &err);
  return {lhs, grad.col(0), nan_max(err)};
}

PointEval score_tower_point(const Context& c, const Vector& y) {
  Matrix err;
  const Matrix grad = jacobian_fd(
      [&](const Vector& p) { return Vector::Constant(1, log_marginal_density(c.s, p)); }, y,
      c.policy, c.inside, &err);
  const Vector rhs =
      expect(posterior(c.s, y), [&](const Vector& x) { return conditional_score(c.m, x, y); });
  return {grad.col(0), rhs, nan_max(err)};
}

PointEval moment_recursion_point(const Context& c, int ell, double y) {
  const double lhs = conditional_moment(c.s, ell + 1, y);
  const double tp = c.stat_prime(y);
  const FdResult d = fd_derivative([&](double u) { return conditional_moment(c.s, ell, u); }, y, 1,
                                   c.policy, c.domain);
  const double rhs = d.value / tp + conditional_moment(c.s, 1, y) * conditional_moment(c.s, ell, y);
  return {obs(lhs), obs(rhs), d.error / std::abs(tp)};
}

PointEval solved_recursion_point(const Context& c, int ell, double y, double anchor) {
  const double lhs = conditional_moment(c.s, ell + 1, y);
  const auto integral = [&](double u) {
    return antiderivative_weighted([&](double v) { return conditional_moment(c.s, 1, v); }, anchor,
                                   u, c.m);
  };
  const double i_y = integral(y);
  // exp(-I(y)) D exp(I) = D exp(I - I(y)) by linearity; keeps the exponent O(1)
  const FdResult d = d_operator([&](double u) { return std::exp(integral(u) - i_y); }, c.m, ell + 1,
                                y, c.policy);
  return {obs(lhs), obs(d.value), d.error};
}

PointEval higher_tweedie_point(const Context& c, int ell, double y) {
  const double lhs = conditional_moment(c.s, ell + 1, y);
  const double base = c.log_f_over_h(y);
  // (h/f)(y) D (f/h) = D exp(log(f/h) - log(f/h)(y)) by linearity
  const FdResult d = d_operator([&](double u) { return std::exp(c.log_f_over_h(u) - base); }, c.m,
                                ell + 1, y, c.policy);
  return {obs(lhs), obs(d.value), d.error};
}

PointEval cumulant_pde_point(const Context& c, const Vector& point) {
  const double y = point(0);
  const double t = point(1);
  // exact tilted posterior mean: dK/dt = E[X e^{tX} | Y] / E[e^{tX} | Y]
  const WeightedMeasure post = posterior(c.s, obs(y));
  double max_term = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < post.size(); ++i) {
    if (post.weight(i) > 0.0) max_term = std::max(max_term, t * post.point(i)(0));
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < post.size(); ++i) {
    const double e = post.weight(i) * std::exp(t * post.point(i)(0) - max_term);
    num += e * post.point(i)(0);
    den += e;
  }
  const double lhs = num / den;
  const double tp = c.stat_prime(y);
  const FdResult d = fd_derivative([&](double u) { return conditional_cgf(c.s, t, u); }, y, 1,
                                   c.policy, c.domain);
  const double rhs = d.value / tp + conditional_moment(c.s, 1, y);
  return {obs(lhs), obs(rhs), d.error / std::abs(tp)};
}

PointEval cumulant_from_ce_point(const Context& c, int ell, double y) {
  const double lhs = conditional_cumulant(c.s, ell, y);
  const FdResult d = d_operator([&](double u) { return conditional_moment(c.s, 1, u); }, c.m,
                                ell - 1, y, c.policy);
  return {obs(lhs), obs(d.value), d.error};
}

PointEval cumulant_recursion_point(const Context& c, int ell, double y) {
  const double lhs = conditional_cumulant(c.s, ell + 1, y);
  const double tp = c.stat_prime(y);
  const FdResult d = fd_derivative([&](double u) { return conditional_cumulant(c.s, ell, u); }, y,
                                   1, c.policy, c.domain);
  return {obs(lhs), obs(d.value / tp), d.error / std::abs(tp)};
}

PointEval cumulant_from_marginal_point(const Context& c, int ell, double y) {
  const double lhs = conditional_cumulant(c.s, ell, y);
  const FdResult d = d_operator([&](double u) { return c.log_f_over_h(u); }, c.m, ell, y, c.policy);
  return {obs(lhs), obs(d.value), d.error};
}

// Moments of T(Y) under f(. | x) by quadrature over the observation space.
PointEval log_partition_point(const Context& c, const Vector& x) {
  const ExpFamModel& m = c.m;
  const auto [lo, hi] = m.support().bounds_1d();
  const double phi = m.log_partition(x);
  const double center = m.observation_mean(x)(0);
  const Eigen::Index d = m.dim_param();
  const auto density = [&](double y) {
    if (!(y > lo && y < hi)) return 0.0;
    const Vector p = obs(y);
    const double v = std::exp(m.log_base_measure(p) + x.dot(m.sufficient_stat(p)) - phi);
    return std::isfinite(v) ? v : 0.0;
  };
  const auto integral = [&](const ScalarFn& g) {
    return integrate_interval(
               [&](double y) {
                 const double f = density(y);
                 return f == 0.0 ? 0.0 : g(y) * f;
               },
               lo, hi, center)
        .value;
  };
  Vector mean(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    mean(j) = integral([&](double y) { return m.sufficient_stat(obs(y))(j); });
  }
  Matrix var(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      var(i, j) = var(j, i) = integral([&](double y) {
        const Vector t = m.sufficient_stat(obs(y));
        return (t(i) - mean(i)) * (t(j) - mean(j));
      });
    }
  }
  const DomainFn in_param = [&m](const Vector& p) { return m.in_param_space(p); };
  const auto phi_fn = [&m](const Vector& p) { return m.log_partition(p); };
  Matrix err;
  const Matrix grad = jacobian_fd([&](const Vector& p) { return Vector::Constant(1, phi_fn(p)); }, x,
                                  c.policy, in_param, &err);
  const Matrix hess = hessian_fd(phi_fn, x, c.policy, in_param);
  Vector lhs(d + d * d);
  lhs << mean, flatten(var);
  Vector rhs(d + d * d);
  rhs << grad.col(0), flatten(hess);
  return {lhs, rhs, nan_max(err)};
}

std::vector<Vector> heaviest_atoms(const WeightedMeasure& atoms, std::size_t count) {
  std::vector<std::size_t> idx(atoms.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return atoms.weight(a) > atoms.weight(b); });
  idx.resize(std::min(count, idx.size()));
  std::sort(idx.begin(), idx.end());
  std::vector<Vector> out;
  for (std::size_t i : idx) out.push_back(atoms.point(i));
  return out;
}

std::vector<Vector> pde_points(const Grid& grid) {
  const std::size_t n = grid.size();
  std::vector<std::size_t> picks;
  if (n <= 5) {
    for (std::size_t i = 0; i < n; ++i) picks.push_back(i);
  } else {
    for (std::size_t k = 0; k < 5; ++k) picks.push_back((k * (n - 1) + 2) / 4);
  }
  std::vector<Vector> pts;
  for (std::size_t i : picks) {
    for (double t : {-0.5, 0.0, 0.5}) pts.push_back(Vector{{grid[i](0), t}});
  }
  return pts;
}

IdentityReport verify_mmse(const IdentitySpec& spec, const Scenario& scenario,
                           const VerifyOptions& options, double tol) {
  // the representation concerns X itself, whatever U the scenario declares
  const Scenario sx(scenario.name(), scenario.model_ptr(), scenario.prior(), UMap::identity());
  IdentityReport r;
  std::vector<Vector> point{Vector()};
  MmseResult res;
  YQuadrature q;
  std::string failure;
  try {
    q = make_y_quadrature(sx, options.mmse);
    res = mmse(sx, q, options.policy);
  } catch (const Error& e) {
    failure = e.what();
  }
  r = run_points(spec, scenario, point, tol, [&](const Vector&) -> PointEval {
    if (!failure.empty()) throw Error(ErrorCode::QuadratureFailure, failure);
    return {flatten(res.direct), flatten(res.representation)};
  });
  if (failure.empty()) {
    std::ostringstream os;
    os.precision(10);
    os << "y-quadrature: " << q.nodes.size() << " nodes on [" << q.nodes.front()(0) << ", "
       << q.nodes.back()(0) << "], marginal mass " << res.mass;
    r.notes.push_back(os.str());
  }
  return r;
}

}  // namespace

IdentityReport verify(const IdentitySpec& spec, const Scenario& scenario, const Grid& grid,
                      const VerifyOptions& options) {
  options.policy.validate();
  if (takes_order(spec.kind) && spec.ell < 1) {
    throw Error(ErrorCode::InvalidArgument, spec.label() + ": order must be >= 1");
  }
  if (const std::string why = incompatibility(spec, scenario, grid); !why.empty()) {
    throw Error(ErrorCode::ShapeMismatch, spec.label() + " on " + scenario.name() + ": " + why);
  }
  grid.validate(scenario.model());
  const double tol = options.tolerances.lookup(spec);
  const Context c(scenario, options.policy);
  const int ell = spec.ell;
  std::vector<Vector> pts = grid.points();
  switch (spec.kind) {
    case IdentityKind::JacobianGeneral:
      return run_points(spec, scenario, pts, tol,
                        [&](const Vector& y) { return jacobian_point(c, y, true); });
    case IdentityKind::JacobianExpFam: {
      auto r = run_points(spec, scenario, pts, tol,
                          [&](const Vector& y) { return jacobian_point(c, y, false); });
      r.notes.push_back("u_map = " + scenario.u_map().describe());
      return r;
    }
    case IdentityKind::Variance:
      return run_points(spec, scenario, pts, tol,
                        [&](const Vector& y) { return variance_point(c, y); });
    case IdentityKind::MmseRepresentation:
      return verify_mmse(spec, scenario, options, tol);
    case IdentityKind::Tweedie:
      return run_points(spec, scenario, pts, tol,
                        [&](const Vector& y) { return tweedie_point(c, y); });
    case IdentityKind::ScoreTower:
      return run_points(spec, scenario, pts, tol,
                        [&](const Vector& y) { return score_tower_point(c, y); });
    case IdentityKind::MomentRecursion:
      return run_points(spec, scenario, pts, tol,
                        [&](const Vector& y) { return moment_recursion_point(c, ell, y(0)); });
    case IdentityKind::SolvedRecursion: {
      const double a = spec.anchor ? *spec.anchor
                                   : (options.anchor ? *options.anchor : grid.midpoint());
      auto r = run_points(spec, scenario, pts, tol, [&](const Vector& y) {
        return solved_recursion_point(c, ell, y(0), a);
      });
      std::ostringstream os;
      os.precision(17);
      os << "anchor a = " << a;
      r.notes.push_back(os.str());
      return r;
    }
    case IdentityKind::HigherOrderTweedie:
      return run_points(spec, scenario, pts, tol,
                        [&](const Vector& y) { return higher_tweedie_point(c, ell, y(0)); });
    case IdentityKind::CumulantPde: {
      auto r = run_points(spec, scenario, pde_points(grid), tol,
                          [&](const Vector& p) { return cumulant_pde_point(c, p); });
      r.notes.push_back("points are (y, t)");
      return r;
    }
    case IdentityKind::CumulantFromCE:
      return run_points(spec, scenario, pts, tol,
                        [&](const Vector& y) { return cumulant_from_ce_point(c, ell, y(0)); });
    case IdentityKind::CumulantRecursion:
      return run_points(spec, scenario, pts, tol,
                        [&](const Vector& y) { return cumulant_recursion_point(c, ell, y(0)); });
    case IdentityKind::CumulantFromMarginal:
      return run_points(spec, scenario, pts, tol, [&](const Vector& y) {
        return cumulant_from_marginal_point(c, ell, y(0));
      });
    case IdentityKind::LogPartitionMeanVar: {
      auto r = run_points(spec, scenario, heaviest_atoms(scenario.prior_atoms(), 5), tol,
                          [&](const Vector& x) { return log_partition_point(c, x); });
      r.notes.push_back("points are natural parameters x; sides are [E T, vec Var T] vs [grad phi, vec Hess phi]");
      return r;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unhandled identity kind");
}

std::vector<IdentityReport> verify_specs(const std::vector<IdentitySpec>& specs,
                                         const Scenario& scenario, const Grid& grid,
                                         const VerifyOptions& options) {
  std::vector<IdentityReport> out;
  out.reserve(specs.size());
  for (const auto& spec : specs) {
    if (const std::string why = incompatibility(spec, scenario, grid); !why.empty()) {
      IdentityReport r;
      r.kind = spec.label();
      r.scenario = scenario.name();
      r.tolerance = options.tolerances.lookup(spec);
      r.skipped = true;
      r.skip_reason = why;
      out.push_back(std::move(r));
      continue;
    }
    out.push_back(verify(spec, scenario, grid, options));
  }
  return out;
}

std::vector<IdentityReport> verify_all(const Scenario& scenario, const Grid& grid,
                                       const VerifyOptions& options) {
  return verify_specs(default_suite(options.max_order), scenario, grid, options);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::json vector_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

nlohmann::json report_json(const IdentityReport& r) {
  nlohmann::json j;
  j["kind"] = r.kind;
  j["scenario"] = r.scenario;
  j["tolerance"] = r.tolerance;
  j["max_residual"] = r.skipped ? nlohmann::json(nullptr) : number(r.max_residual);
  j["pass"] = r.pass;
  j["skipped"] = r.skipped;
  j["skip_reason"] = r.skip_reason.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.skip_reason);
  auto& points = j["points"] = nlohmann::json::array();
  auto& lhs = j["lhs"] = nlohmann::json::array();
  auto& rhs = j["rhs"] = nlohmann::json::array();
  auto& residual = j["residual"] = nlohmann::json::array();
  auto& excluded = j["excluded"] = nlohmann::json::array();
  auto& fd_error = j["fd_error"] = nlohmann::json::array();
  auto& errors = j["errors"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    points.push_back(vector_json(r.points[i]));
    lhs.push_back(r.lhs[i].size() ? vector_json(r.lhs[i]) : nlohmann::json(nullptr));
    rhs.push_back(r.rhs[i].size() ? vector_json(r.rhs[i]) : nlohmann::json(nullptr));
    residual.push_back(number(r.residual[i]));
    excluded.push_back(static_cast<bool>(r.excluded[i]));
    fd_error.push_back(number(r.fd_error[i]));
    errors.push_back(r.errors[i].empty() ? nlohmann::json(nullptr) : nlohmann::json(r.errors[i]));
  }
  j["notes"] = r.notes;
  return j;
}

std::string joined(const Vector& v) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v(i);
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string reports_to_json(const std::string& scenario, const std::vector<IdentityReport>& reports) {
  nlohmann::json j;
  j["scenario"] = scenario;
  j["reports"] = nlohmann::json::array();
  for (const auto& r : reports) j["reports"].push_back(report_json(r));
  return j.dump(2) + "\n";
}

std::string reports_to_csv(const std::vector<IdentityReport>& reports) {
  std::ostringstream os;
  os.precision(17);
  os << "kind,scenario,index,point,lhs,rhs,residual,excluded,fd_error,tolerance,pass,error\n";
  for (const auto& r : reports) {
    if (r.skipped) {
      os << csv_field(r.kind) << ',' << csv_field(r.scenario) << ",,,,,,,," << r.tolerance
         << ",skipped," << csv_field(r.skip_reason) << '\n';
      continue;
    }
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      os << csv_field(r.kind) << ',' << csv_field(r.scenario) << ',' << i << ','
         << joined(r.points[i]) << ',' << joined(r.lhs[i]) << ',' << joined(r.rhs[i]) << ',';
      if (std::isfinite(r.residual[i])) os << r.residual[i];
      os << ',' << (r.excluded[i] ? "true" : "false") << ',';
      if (std::isfinite(r.fd_error[i])) os << r.fd_error[i];
      os << ',' << r.tolerance << ',' << (r.pass ? "true" : "false") << ','
         << csv_field(r.errors[i]) << '\n';
    }
  }
  return os.str();
}

}  // namespace tweedie
