#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "tweedie/calculus.hpp"
#include "tweedie/config.hpp"
#include "tweedie/empirical_bayes.hpp"
#include "tweedie/error.hpp"
#include "tweedie/identities.hpp"
#include "tweedie/model.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitFailure = 2;

struct VerifyArgs {
  std::string config;
  std::string identity = "all";
  std::string out;
  std::string format = "json";
  std::optional<std::string> fd_scheme;
  std::optional<double> fd_step;
  std::optional<double> sing_margin;
  bool paper_erratum_mode = false;
};

struct EbArgs {
  std::string config;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<int> ell_max;
  std::string out;
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tweedie::Error(tweedie::ErrorCode::ConfigError, "cannot write '" + path + "'");
  out << text;
}

int cmd_verify(const VerifyArgs& args) {
  tweedie::ScenarioConfig cfg = tweedie::load_config(args.config, {args.paper_erratum_mode});
  tweedie::VerifyOptions options = cfg.verify;
  if (args.fd_scheme) options.policy.scheme = tweedie::parse_fd_scheme(*args.fd_scheme);
  if (args.fd_step) options.policy.base_step = *args.fd_step;
  if (args.sing_margin) options.policy.sing_margin = *args.sing_margin;
  options.policy.validate();

  const auto specs = tweedie::expand_selection(args.identity, options.max_order);
  const bool explicit_kind = args.identity != "all";
  if (explicit_kind) {
    // A named identity that cannot run on this scenario is a usage error.
    for (const auto& spec : specs) {
      const std::string why = tweedie::incompatibility(spec, *cfg.scenario, cfg.grid);
      if (!why.empty()) throw tweedie::Error(tweedie::ErrorCode::ShapeMismatch, spec.label() + ": " + why);
    }
  }
  const auto reports = tweedie::verify_specs(specs, *cfg.scenario, cfg.grid, options);

  bool all_pass = true;
  for (const auto& r : reports) {
    std::cerr << r.summary() << "\n";
    if (!r.skipped && !r.pass) all_pass = false;
  }
  emit(args.format == "csv" ? tweedie::reports_to_csv(reports)
                            : tweedie::reports_to_json(cfg.scenario->name(), reports),
       args.out);
  return all_pass ? kExitPass : kExitFailure;
}

int cmd_eb(const EbArgs& args) {
  const tweedie::ScenarioConfig cfg = tweedie::load_config(args.config);
  const std::size_t n = args.n.value_or(cfg.eb.n);
  const std::uint64_t seed = args.seed.value_or(cfg.eb.seed);
  const int ell_max = args.ell_max.value_or(cfg.eb.ell_max);
  const tweedie::Grid& grid = cfg.eb.grid ? *cfg.eb.grid : cfg.grid;

  const tweedie::EbReport report =
      tweedie::eb_benchmark(*cfg.scenario, n, grid, ell_max, seed, cfg.eb.bandwidth);
  bool pass = true;
  for (const auto& r : report.per_ell) {
    const auto idx = static_cast<std::size_t>(r.ell - 1);
    const bool has_threshold = idx < cfg.eb.mae_threshold.size();
    const bool ok = !has_threshold || (std::isfinite(r.mae_kde) && r.mae_kde <= cfg.eb.mae_threshold[idx]);
    pass = pass && ok;
    std::cerr << (ok ? "PASS" : "FAIL") << " eb ell=" << r.ell << " mae_kde=" << r.mae_kde
              << " mae_exact_marginal=" << r.mae_exact_marginal;
    if (has_threshold) std::cerr << " threshold=" << cfg.eb.mae_threshold[idx];
    std::cerr << " failed_points=" << r.failed_points << "\n";
  }
  emit(report.to_json(), args.out);
  return pass ? kExitPass : kExitFailure;
}

int cmd_list() {
  std::cout << "models:\n";
  for (const auto& m : tweedie::model_catalog()) {
    std::cout << "  " << m.name;
    if (!m.parameters.empty()) {
      std::cout << " (";
      for (std::size_t i = 0; i < m.parameters.size(); ++i) {
        std::cout << (i ? ", " : "") << m.parameters[i];
      }
      std::cout << ")";
    }
    std::cout << ": " << m.description << "\n";
  }
  std::cout << "identities:\n";
  for (auto kind : tweedie::identity_kinds()) {
    std::cout << "  " << tweedie::to_string(kind) << (tweedie::takes_order(kind) ? "(ell)" : "")
              << ": " << tweedie::describe(kind) << "\n";
  }
  std::cout << "u_map:\n"
               "  identity: U = X\n"
               "  power(ell): elementwise X^ell\n"
               "  component(index): X[index], 0-based\n"
               "  affine(A, b): A X + b\n"
               "  outer_power(ell): ell-fold outer product of X, flattened\n";
  std::cout << "fd schemes: " << tweedie::to_string(tweedie::FdScheme::Central2) << ", "
            << tweedie::to_string(tweedie::FdScheme::Central4) << ", "
            << tweedie::to_string(tweedie::FdScheme::Richardson) << "\n";
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional expectations and derivative identities for exponential families"};
  app.require_subcommand(1);

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "check derivative identities on a scenario");
  v->add_option("config", verify.config, "scenario config (JSON)")->required();
  v->add_option("--identity", verify.identity, "identity kind, Kind(ell), or all");
  v->add_option("--out", verify.out, "report path (stdout when absent)");
  v->add_option("--format", verify.format, "report format")->check(CLI::IsMember({"json", "csv"}));
  v->add_option("--fd-scheme", verify.fd_scheme, "central-2 | central-4 | richardson");
  v->add_option("--fd-step", verify.fd_step, "finite-difference base step");
  v->add_option("--sing-margin", verify.sing_margin, "exclusion margin for |T'(y)|");
  v->add_flag("--paper-erratum-mode", verify.paper_erratum_mode,
              "use the printed log-det gradient for Wishart models");

  EbArgs eb;
  auto* e = app.add_subcommand("eb", "empirical-Bayes benchmark against the exact posterior");
  e->add_option("config", eb.config, "scenario config (JSON)")->required();
  e->add_option("--n", eb.n, "number of marginal samples");
  e->add_option("--seed", eb.seed, "random seed");
  e->add_option("--ell-max", eb.ell_max, "highest posterior moment");
  e->add_option("--out", eb.out, "report path (stdout when absent)");

  auto* l = app.add_subcommand("list", "list models, identities and u_map kinds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitPass : kExitError;
  }

  try {
    if (v->parsed()) return cmd_verify(verify);
    if (e->parsed()) return cmd_eb(eb);
    if (l->parsed()) return cmd_list();
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
