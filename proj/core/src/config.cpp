#include "tweedie/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "tweedie/error.hpp"

namespace tweedie {

namespace {

using nlohmann::json;

// A JSON value together with its JSON-pointer path, for error messages.
class Node {
 public:
  Node(const json& value, std::string path, const std::string& origin)
      : value_(value), path_(std::move(path)), origin_(origin) {}

  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorCode::ConfigError,
                origin_ + ": " + (path_.empty() ? "/" : path_) + ": " + message);
  }

  const json& raw() const { return value_; }
  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return value_.is_object() && value_.contains(key); }

  Node at(const std::string& key) const {
    if (!value_.is_object()) fail("expected an object");
    if (!value_.contains(key)) Node(value_, path_ + "/" + key, origin_).fail("missing required field");
    return Node(value_.at(key), path_ + "/" + key, origin_);
  }

  Node at(std::size_t index) const {
    return Node(value_.at(index), path_ + "/" + std::to_string(index), origin_);
  }

  std::size_t size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    return value_.get<double>();
  }

  long long integer() const {
    if (!value_.is_number_integer() && !value_.is_number_unsigned()) fail("expected an integer");
    return value_.get<long long>();
  }

  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }

  bool boolean() const {
    if (!value_.is_boolean()) fail("expected true or false");
    return value_.get<bool>();
  }

  /// A number or an array of numbers.
  Vector vector() const {
    if (value_.is_number()) return obs(number());
    const std::size_t n = size();
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = at(i).number();
    return v;
  }

  Matrix matrix() const {
    const std::size_t rows = size();
    if (rows == 0) fail("expected a non-empty matrix");
    const std::size_t cols = at(std::size_t{0}).size();
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      const Node row = at(i);
      if (row.size() != cols) row.fail("rows have different lengths");
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = row.at(j).number();
    }
    return m;
  }

  void only(std::initializer_list<const char*> keys) const {
    if (!value_.is_object()) fail("expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : value_.items()) {
      if (!allowed.count(k)) Node(v, path_ + "/" + k, origin_).fail("unknown field");
    }
  }

 private:
  const json& value_;
  std::string path_;
  const std::string& origin_;
};

// Runs f, re-raising library errors as config errors at `node`.
template <class F>
auto guarded(const Node& node, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    node.fail(e.what());
  }
}

ModelPtr parse_model(const Node& n, const ModelOptions& options) {
  n.only({"name", "params"});
  const std::string name = n.at("name").string();
  ParamMap params;
  if (n.has("params")) {
    const Node p = n.at("params");
    if (!p.raw().is_object()) p.fail("expected an object");
    for (const auto& [k, v] : p.raw().items()) params[k] = p.at(k).number();
  }
  return guarded(n, [&] { return make_model(name, params, options); });
}

Density1D parse_density(const Node& n, std::optional<std::pair<double, double>> box) {
  n.only({"name", "params"});
  const std::string name = n.at("name").string();
  const Vector p = n.at("params").vector();
  auto need = [&](Eigen::Index k) {
    if (p.size() != k) n.at("params").fail("expected " + std::to_string(k) + " parameters");
  };
  return guarded(n, [&]() -> Density1D {
    if (name == "normal") {
      need(2);
      return box ? normal_density(p(0), p(1), box->first, box->second) : normal_density(p(0), p(1));
    }
    if (name == "gamma") {
      need(2);
      return box ? gamma_density(p(0), p(1), box->first, box->second) : gamma_density(p(0), p(1));
    }
    if (name == "uniform") {
      need(2);
      return uniform_density(p(0), p(1));
    }
    n.at("name").fail("unknown density '" + name + "' (normal | gamma | uniform)");
  });
}

Prior parse_prior(const Node& n, const ExpFamModel& model) {
  const std::string type = n.at("type").string();
  if (type == "discrete") {
    n.only({"type", "atoms"});
    const Node atoms = n.at("atoms");
    if (atoms.size() == 0) atoms.fail("expected at least one atom");
    std::vector<Vector> points;
    std::vector<double> weights;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const Node a = atoms.at(i);
      a.only({"x", "source", "w"});
      if (a.has("x") == a.has("source")) a.fail("give exactly one of 'x' or 'source'");
      Vector x = a.has("x") ? a.at("x").vector()
                            : guarded(a.at("source"), [&] {
                                return model.natural_from_source(a.at("source").vector());
                              });
      if (x.size() != model.dim_param()) {
        a.fail("atom has dimension " + std::to_string(x.size()) + ", model expects " +
               std::to_string(model.dim_param()));
      }
      points.push_back(std::move(x));
      weights.push_back(a.has("w") ? a.at("w").number() : 1.0);
    }
    return guarded(n, [&] { return Prior(WeightedMeasure(std::move(points), std::move(weights))); });
  }
  if (type == "continuous") {
    n.only({"type", "density", "nodes", "box"});
    const Node dens = n.at("density");
    const bool single = dens.raw().is_object();
    const std::size_t dims = single ? 1 : dens.size();
    if (static_cast<Eigen::Index>(dims) != model.dim_param()) {
      dens.fail("prior has " + std::to_string(dims) + " factor(s), model parameter dimension is " +
                std::to_string(model.dim_param()));
    }
    std::vector<std::optional<std::pair<double, double>>> boxes(dims);
    if (n.has("box")) {
      const Node b = n.at("box");
      const bool flat = b.size() == 2 && b.at(std::size_t{0}).raw().is_number();
      if (flat && dims == 1) {
        boxes[0] = std::pair{b.at(std::size_t{0}).number(), b.at(std::size_t{1}).number()};
      } else {
        if (b.size() != dims) b.fail("expected one [lo, hi] pair per dimension");
        for (std::size_t i = 0; i < dims; ++i) {
          const Node bi = b.at(i);
          if (bi.size() != 2) bi.fail("expected [lo, hi]");
          boxes[i] = std::pair{bi.at(std::size_t{0}).number(), bi.at(std::size_t{1}).number()};
        }
      }
    }
    ContinuousPrior prior;
    for (std::size_t i = 0; i < dims; ++i) {
      prior.factors.push_back(parse_density(single ? dens : dens.at(i), boxes[i]));
    }
    if (n.has("nodes")) {
      const long long nodes = n.at("nodes").integer();
      if (nodes < 1 || nodes > 4096) n.at("nodes").fail("expected 1..4096");
      prior.nodes = static_cast<int>(nodes);
    }
    return prior;
  }
  n.at("type").fail("expected 'discrete' or 'continuous'");
}

UMap parse_u_map(const Node& n) {
  const std::string kind = n.at("kind").string();
  return guarded(n, [&]() -> UMap {
    if (kind == "identity") {
      n.only({"kind"});
      return UMap::identity();
    }
    if (kind == "power" || kind == "outer_power") {
      n.only({"kind", "ell"});
      const auto ell = static_cast<int>(n.at("ell").integer());
      return kind == "power" ? UMap::power(ell) : UMap::outer_power(ell);
    }
    if (kind == "component") {
      n.only({"kind", "index"});
      return UMap::component(static_cast<Eigen::Index>(n.at("index").integer()));
    }
    if (kind == "affine") {
      n.only({"kind", "A", "b"});
      return UMap::affine(n.at("A").matrix(), n.at("b").vector());
    }
    n.at("kind").fail("unknown u_map kind '" + kind +
                      "' (identity | power | component | affine | outer_power)");
  });
}

Grid parse_grid(const Node& n) {
  return guarded(n, [&]() -> Grid {
    if (n.has("points")) {
      n.only({"points"});
      const Node p = n.at("points");
      std::vector<Vector> pts;
      for (std::size_t i = 0; i < p.size(); ++i) pts.push_back(p.at(i).vector());
      return Grid::from_points(std::move(pts));
    }
    n.only({"min", "max", "count", "step"});
    const double lo = n.at("min").number();
    const double hi = n.at("max").number();
    if (n.has("count") == n.has("step")) n.fail("give exactly one of 'count' or 'step'");
    if (n.has("count")) return Grid::uniform(lo, hi, static_cast<int>(n.at("count").integer()));
    return Grid::stepped(lo, hi, n.at("step").number());
  });
}

FdPolicy parse_fd_policy(const Node& n) {
  n.only({"scheme", "step", "step_rule", "sing_margin", "max_shrink"});
  FdPolicy p;
  guarded(n, [&] {
    if (n.has("scheme")) p.scheme = parse_fd_scheme(n.at("scheme").string());
    if (n.has("step")) p.base_step = n.at("step").number();
    if (n.has("step_rule")) p.step_rule = parse_step_rule(n.at("step_rule").string());
    if (n.has("sing_margin")) p.sing_margin = n.at("sing_margin").number();
    if (n.has("max_shrink")) p.max_shrink = n.at("max_shrink").number();
    p.validate();
    return 0;
  });
  return p;
}

EbConfig parse_eb(const Node& n) {
  n.only({"n", "seed", "ell_max", "grid", "mae_threshold", "bandwidth"});
  EbConfig eb;
  if (n.has("n")) {
    const long long v = n.at("n").integer();
    if (v < 0) n.at("n").fail("expected a non-negative integer");
    eb.n = static_cast<std::size_t>(v);
  }
  if (n.has("seed")) {
    const Node s = n.at("seed");
    if (!s.raw().is_number_unsigned() && !(s.raw().is_number_integer() && s.integer() >= 0)) {
      s.fail("expected a non-negative integer");
    }
    eb.seed = s.raw().get<std::uint64_t>();
  }
  if (n.has("ell_max")) eb.ell_max = static_cast<int>(n.at("ell_max").integer());
  if (n.has("grid")) eb.grid = parse_grid(n.at("grid"));
  if (n.has("mae_threshold")) {
    const Vector t = n.at("mae_threshold").vector();
    eb.mae_threshold.assign(t.data(), t.data() + t.size());
  }
  if (n.has("bandwidth") && !n.at("bandwidth").raw().is_null()) {
    eb.bandwidth = n.at("bandwidth").number();
  }
  return eb;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) line += text[i] == '\n';
  return line;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& origin,
                            const ConfigOverrides& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, origin + ": line " + std::to_string(line_of(text, e.byte)) +
                                            ": " + e.what());
  }
  const Node root(doc, "", origin);
  root.only({"name", "model", "prior", "u_map", "grid", "fd_policy", "tolerances", "max_order",
             "anchor", "mmse", "eb", "options"});

  ModelOptions model_options;
  if (root.has("options")) {
    const Node o = root.at("options");
    o.only({"paper_erratum_mode", "support_margin"});
    if (o.has("paper_erratum_mode")) {
      model_options.printed_logdet_gradient = o.at("paper_erratum_mode").boolean();
    }
    if (o.has("support_margin")) {
      model_options.support_margin = o.at("support_margin").number();
      if (!(model_options.support_margin >= 0.0)) o.at("support_margin").fail("expected >= 0");
    }
  }
  model_options.printed_logdet_gradient =
      model_options.printed_logdet_gradient || overrides.paper_erratum_mode;

  const std::string name = root.has("name") ? root.at("name").string() : origin;
  ModelPtr model = parse_model(root.at("model"), model_options);
  Prior prior = parse_prior(root.at("prior"), *model);
  UMap u = root.has("u_map") ? parse_u_map(root.at("u_map")) : UMap::identity();

  ScenarioConfig cfg;
  cfg.scenario = guarded(root, [&] {
    return std::make_shared<const Scenario>(name, model, std::move(prior), std::move(u));
  });
  cfg.grid = parse_grid(root.at("grid"));
  guarded(root.at("grid"), [&] {
    cfg.grid.validate(*model);
    return 0;
  });

  if (root.has("fd_policy")) cfg.verify.policy = parse_fd_policy(root.at("fd_policy"));
  if (root.has("tolerances")) {
    const Node t = root.at("tolerances");
    if (!t.raw().is_object()) t.fail("expected an object");
    for (const auto& [k, v] : t.raw().items()) {
      const Node entry = t.at(k);
      guarded(entry, [&] { return parse_identity(k); });
      const double tol = entry.number();
      if (!(tol > 0.0)) entry.fail("tolerance must be > 0");
      cfg.verify.tolerances.overrides[k] = tol;
    }
  }
  if (root.has("max_order")) {
    const long long m = root.at("max_order").integer();
    if (m < 1 || m >= kMaxMomentOrder) {
      root.at("max_order").fail("expected 1.." + std::to_string(kMaxMomentOrder - 1));
    }
    cfg.verify.max_order = static_cast<int>(m);
  }
  if (root.has("anchor")) cfg.verify.anchor = root.at("anchor").number();
  if (root.has("mmse")) {
    const Node m = root.at("mmse");
    m.only({"min", "max", "nodes_per_panel", "tail_log_drop"});
    if (m.has("min")) cfg.verify.mmse.lo = m.at("min").number();
    if (m.has("max")) cfg.verify.mmse.hi = m.at("max").number();
    if (m.has("nodes_per_panel")) {
      cfg.verify.mmse.nodes_per_panel = static_cast<int>(m.at("nodes_per_panel").integer());
    }
    if (m.has("tail_log_drop")) cfg.verify.mmse.tail_log_drop = m.at("tail_log_drop").number();
  }
  if (root.has("eb")) cfg.eb = parse_eb(root.at("eb"));
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), overrides);
}

}  // namespace tweedie
