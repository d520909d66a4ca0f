#include "tweedie/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tweedie/error.hpp"
#include "tweedie/parallel.hpp"
#include "tweedie/quadrature.hpp"

namespace tweedie {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_scalar_param(const Scenario& s, std::string_view what) {
  if (s.model().dim_param() != 1) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + " requires a scalar natural parameter; " + s.model().name() +
                    " has dimension " + std::to_string(s.model().dim_param()));
  }
}

void require_order(int ell, std::string_view what) {
  if (ell < 1 || ell > kMaxMomentOrder) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + ": order " + std::to_string(ell) + " outside [1, " +
                    std::to_string(kMaxMomentOrder) + "]");
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid

Grid Grid::uniform(double lo, double hi, int count) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "grid: count must be >= 1");
  if (!std::isfinite(lo) || !std::isfinite(hi) || (count > 1 && !(hi > lo))) {
    throw Error(ErrorCode::InvalidArgument, "grid: need finite min < max");
  }
  Grid g;
  if (count == 1) {
    g.points_.push_back(obs(lo));
    return g;
  }
  const double step = (hi - lo) / (count - 1);
  for (int i = 0; i < count; ++i) g.points_.push_back(obs(i + 1 == count ? hi : lo + i * step));
  g.spacing_ = step;
  return g;
}

Grid Grid::stepped(double lo, double hi, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid: step must be > 0");
  if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
    throw Error(ErrorCode::InvalidArgument, "grid: need finite min <= max");
  }
  const auto intervals = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  Grid g;
  for (int i = 0; i <= intervals; ++i) g.points_.push_back(obs(lo + i * step));
  if (intervals > 0) g.spacing_ = step;
  return g;
}

Grid Grid::from_points(std::vector<Vector> points) {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "grid: no points");
  const Eigen::Index d = points[0].size();
  for (const auto& p : points) {
    if (p.size() != d || d == 0) {
      throw Error(ErrorCode::ShapeMismatch, "grid: points have inconsistent dimension");
    }
    if (!p.allFinite()) throw Error(ErrorCode::InvalidArgument, "grid: non-finite point");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (points[i] == points[j]) throw Error(ErrorCode::InvalidArgument, "grid: repeated point");
    }
  }
  Grid g;
  g.points_ = std::move(points);
  if (d == 1) {
    for (std::size_t i = 1; i < g.points_.size(); ++i) {
      if (!(g.points_[i](0) > g.points_[i - 1](0))) {
        throw Error(ErrorCode::InvalidArgument, "grid: scalar points must be strictly increasing");
      }
    }
  }
  return g;
}

double Grid::midpoint() const {
  if (!is_scalar()) throw Error(ErrorCode::ShapeMismatch, "grid midpoint needs a scalar grid");
  return 0.5 * (points_.front()(0) + points_.back()(0));
}

void Grid::validate(const ExpFamModel& model) const {
  for (const auto& p : points_) {
    if (p.size() != model.dim_obs()) {
      throw Error(ErrorCode::ShapeMismatch, "grid dimension " + std::to_string(p.size()) +
                                                " does not match " + model.name() +
                                                " observation dimension " +
                                                std::to_string(model.dim_obs()));
    }
    if (!model.in_support(p)) {
      std::ostringstream os;
      os << "grid point [" << p.transpose() << "] is not interior to the support of "
         << model.name();
      throw Error(ErrorCode::OutOfSupport, os.str());
    }
  }
}

// ---------------------------------------------------------------------------
// GridFunction

std::string GridFunction::to_csv() const {
  std::ostringstream os;
  const Eigen::Index k = grid.dim();
  const Eigen::Index n = values.empty() ? 0 : values[0].size();
  for (Eigen::Index i = 0; i < k; ++i) os << (i ? "," : "") << 'y' << i;
  for (Eigen::Index j = 0; j < n; ++j) os << ',' << 'v' << j;
  os << '\n';
  for (std::size_t p = 0; p < grid.size(); ++p) {
    for (Eigen::Index i = 0; i < k; ++i) os << (i ? "," : "") << format_double(grid[p](i));
    const Matrix& v = values[p];
    for (Eigen::Index j = 0; j < v.size(); ++j) os << ',' << format_double(v.data()[j]);
    os << '\n';
  }
  return os.str();
}

std::string GridFunction::to_json() const {
  nlohmann::json j;
  j["points"] = nlohmann::json::array();
  j["values"] = nlohmann::json::array();
  for (std::size_t p = 0; p < grid.size(); ++p) {
    j["points"].push_back(std::vector<double>(grid[p].data(), grid[p].data() + grid[p].size()));
    const Matrix& v = values[p];
    j["values"].push_back(std::vector<double>(v.data(), v.data() + v.size()));
  }
  j["rows"] = values.empty() ? 0 : values[0].rows();
  j["cols"] = values.empty() ? 0 : values[0].cols();
  return j.dump(2);
}

GridFunction tabulate(const Grid& grid, const std::function<Matrix(const Vector&)>& fn) {
  GridFunction out{grid, std::vector<Matrix>(grid.size())};
  parallel_for(grid.size(), [&](std::size_t i) { out.values[i] = fn(grid[i]); });
  for (const auto& v : out.values) {
    if (!v.allFinite()) throw Error(ErrorCode::Overflow, "tabulate: non-finite value");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conditional functionals

Vector conditional_expectation(const Scenario& scenario, const Vector& y) {
  const WeightedMeasure post = posterior(scenario, y);
  const UMap& u = scenario.u_map();
  return expect(post, [&u](const Vector& x) { return u(x); });
}

double conditional_moment(const Scenario& scenario, int ell, double y) {
  require_scalar_param(scenario, "conditional_moment");
  require_order(ell, "conditional_moment");
  const WeightedMeasure post = posterior(scenario, obs(y));
  double m = 0.0;
  for (std::size_t i = 0; i < post.size(); ++i) {
    m += post.weight(i) * std::pow(post.point(i)(0), ell);
  }
  return m;
}

double conditional_cgf(const Scenario& scenario, double t, double y) {
  require_scalar_param(scenario, "conditional_cgf");
  if (t == 0.0) return 0.0;
  const WeightedMeasure post = posterior(scenario, obs(y));
  double max_term = kNegInf;
  std::vector<double> terms(post.size(), kNegInf);
  for (std::size_t i = 0; i < post.size(); ++i) {
    if (post.weight(i) == 0.0) continue;
    terms[i] = std::log(post.weight(i)) + t * post.point(i)(0);
    max_term = std::max(max_term, terms[i]);
  }
  if (!std::isfinite(max_term)) {
    throw Error(ErrorCode::Overflow, "conditional_cgf: t * x leaves the representable range");
  }
  double sum = 0.0;
  for (double v : terms) sum += std::exp(v - max_term);
  const double k = max_term + std::log(sum);
  if (!std::isfinite(k)) throw Error(ErrorCode::Overflow, "conditional_cgf: non-finite value");
  return k;
}

std::vector<double> cumulants_from_moments(const std::vector<double>& m) {
  const std::size_t n = m.size();
  std::vector<double> kappa(n, 0.0);
  // binomial(r - 1, j - 1) built row by row
  for (std::size_t r = 1; r <= n; ++r) {
    double s = m[r - 1];
    double binom = 1.0;  // C(r-1, 0)
    for (std::size_t j = 1; j < r; ++j) {
      s -= binom * kappa[j - 1] * m[r - j - 1];
      binom = binom * static_cast<double>(r - j) / static_cast<double>(j);
    }
    kappa[r - 1] = s;
  }
  return kappa;
}

double conditional_cumulant(const Scenario& scenario, int ell, double y) {
  require_scalar_param(scenario, "conditional_cumulant");
  require_order(ell, "conditional_cumulant");
  const WeightedMeasure post = posterior(scenario, obs(y));
  double mean = 0.0;
  for (std::size_t i = 0; i < post.size(); ++i) mean += post.weight(i) * post.point(i)(0);
  if (ell == 1) return mean;
  // cumulants of order >= 2 are shift invariant; central moments avoid cancellation
  std::vector<double> central(ell, 0.0);
  for (std::size_t i = 0; i < post.size(); ++i) {
    const double d = post.point(i)(0) - mean;
    double p = 1.0;
    for (int r = 1; r <= ell; ++r) {
      p *= d;
      central[r - 1] += post.weight(i) * p;
    }
  }
  central[0] = 0.0;
  return cumulants_from_moments(central)[ell - 1];
}

// ---------------------------------------------------------------------------
// MMSE

namespace {

double safe_log_marginal(const Scenario& s, double y) {
  try {
    return log_marginal_density(s, obs(y));
  } catch (const Error&) {
    return kNegInf;
  }
}

}  // namespace

YQuadrature make_y_quadrature(const Scenario& scenario, const YQuadratureOptions& options) {
  const ExpFamModel& model = scenario.model();
  if (model.dim_obs() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "y-quadrature needs scalar observations");
  }
  if (options.nodes_per_panel < 1) {
    throw Error(ErrorCode::InvalidArgument, "y-quadrature: nodes_per_panel must be >= 1");
  }
  const auto [slo, shi] = model.support().bounds_1d();
  const double margin = model.support_margin();
  const auto& atoms = scenario.prior_atoms();

  double c = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    c += atoms.weight(i) * model.observation_mean(atoms.point(i))(0);
  }
  if (!std::isfinite(c)) c = std::isfinite(slo) ? slo + 1.0 : (std::isfinite(shi) ? shi - 1.0 : 0.0);
  if (std::isfinite(slo) && c <= slo + margin) c = slo + 1.0;
  if (std::isfinite(shi) && c >= shi - margin) c = shi - 1.0;

  std::vector<double> breaks;
  if (options.lo && options.hi) {
    if (!(*options.hi > *options.lo)) {
      throw Error(ErrorCode::InvalidArgument, "y-quadrature: empty range");
    }
    constexpr int kPanels = 16;
    for (int i = 0; i <= kPanels; ++i) {
      breaks.push_back(*options.lo + (*options.hi - *options.lo) * i / kPanels);
    }
  } else {
    double peak = safe_log_marginal(scenario, c);
    const double delta = 0.5 * std::max(1.0, std::abs(c));
    breaks.push_back(c);
    // upper tail
    if (options.hi) {
      breaks.push_back(*options.hi);
    } else {
      for (int j = 1; j <= 60; ++j) {
        double b = c + delta * (std::pow(2.0, j) - 1.0);
        bool last = false;
        if (std::isfinite(shi) && b >= shi - 0.05 * std::max(1.0, std::abs(shi))) {
          // Gauss-Legendre nodes are interior, so the panel may end on the boundary
          b = shi;
          last = true;
        }
        if (b <= breaks.back()) break;
        breaks.push_back(b);
        const double lf = safe_log_marginal(scenario, b);
        peak = std::max(peak, lf);
        if (last || lf < peak - options.tail_log_drop) break;
      }
    }
    // lower tail
    if (options.lo) {
      breaks.push_back(*options.lo);
    } else {
      for (int j = 1; j <= 60; ++j) {
        double b = 0.0;
        bool last = false;
        if (std::isfinite(slo)) {
          // approach a finite boundary geometrically, then close on it
          b = slo + (c - slo) * std::pow(0.5, j);
          if (b - slo < 0.05 * std::max(1.0, std::abs(slo))) {
            b = slo;
            last = true;
          }
        } else {
          b = c - delta * (std::pow(2.0, j) - 1.0);
        }
        if (b >= *std::min_element(breaks.begin(), breaks.end())) break;
        breaks.push_back(b);
        const double lf = safe_log_marginal(scenario, b);
        peak = std::max(peak, lf);
        if (last || lf < peak - options.tail_log_drop) break;
      }
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  YQuadrature q;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const auto rule = gauss_legendre(options.nodes_per_panel, breaks[p], breaks[p + 1]);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      q.nodes.push_back(obs(rule.nodes[i]));
      q.weights.push_back(rule.weights[i]);
    }
  }
  return q;
}

double condition_number(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return std::numeric_limits<double>::infinity();
  const double smallest = s(s.size() - 1);
  if (smallest == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smallest;
}

MmseResult mmse(const Scenario& scenario, const YQuadrature& quadrature, const FdPolicy& policy) {
  const ExpFamModel& model = scenario.model();
  if (scenario.u_map().kind() != UMap::Kind::Identity) {
    throw Error(ErrorCode::ShapeMismatch, "mmse requires u_map = identity");
  }
  const Eigen::Index d = model.dim_param();
  if (model.dim_obs() != d) {
    throw Error(ErrorCode::SingularJacobian,
                "mmse: J_y T is " + std::to_string(model.dim_obs()) + " x " + std::to_string(d) +
                    " and cannot be inverted");
  }
  if (quadrature.nodes.size() != quadrature.weights.size()) {
    throw Error(ErrorCode::InvalidArgument, "mmse: nodes and weights differ in length");
  }
  const std::size_t n = quadrature.nodes.size();
  std::vector<Matrix> direct(n);
  std::vector<Matrix> rep(n);
  std::vector<double> dens(n, 0.0);
  const DomainFn inside = [&model](const Vector& p) { return model.in_support(p); };
  // Panels close on finite support boundaries, so stencils there must shrink further.
  FdPolicy fd = policy;
  fd.max_shrink = std::max(fd.max_shrink, 1e6);
  parallel_for(n, [&](std::size_t q) {
    const Vector& y = quadrature.nodes[q];
    const double lf = log_marginal_density(scenario, y);
    dens[q] = std::exp(lf);
    if (dens[q] == 0.0) {
      direct[q] = rep[q] = Matrix::Zero(d, d);
      return;
    }
    const WeightedMeasure post = posterior(scenario, y);
    const auto id = [](const Vector& x) { return x; };
    direct[q] = cov(post, id, id);
    const Matrix jt = model.stat_jacobian(y);
    const double cond = condition_number(jt);
    if (!(cond <= 1e12)) {
      std::ostringstream os;
      os << "J_y T at [" << y.transpose() << "] has condition number " << cond;
      throw Error(ErrorCode::SingularJacobian, os.str());
    }
    const Matrix je = jacobian_fd([&](const Vector& p) { return conditional_expectation(scenario, p); },
                                  y, fd, inside);
    rep[q] = jt.partialPivLu().solve(je);
  });
  MmseResult r{Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d), 0.0};
  for (std::size_t q = 0; q < n; ++q) {
    const double w = quadrature.weights[q] * dens[q];
    r.direct += w * direct[q];
    r.representation += w * rep[q];
    r.mass += w;
  }
  r.difference = r.direct - r.representation;
  return r;
}

}  // namespace tweedie
