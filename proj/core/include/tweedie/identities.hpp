#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tweedie/calculus.hpp"
#include "tweedie/engine.hpp"
#include "tweedie/measures.hpp"

namespace tweedie {

enum class IdentityKind {
  JacobianGeneral,
  JacobianExpFam,
  Variance,
  MmseRepresentation,
  Tweedie,
  MomentRecursion,
  SolvedRecursion,
  HigherOrderTweedie,
  CumulantPde,
  CumulantFromCE,
  CumulantRecursion,
  CumulantFromMarginal,
  ScoreTower,
  LogPartitionMeanVar,
};

const std::vector<IdentityKind>& identity_kinds();
std::string_view to_string(IdentityKind kind) noexcept;
IdentityKind parse_identity_kind(std::string_view name);
/// Kinds parameterized by an order ell.
bool takes_order(IdentityKind kind) noexcept;
std::string_view describe(IdentityKind kind) noexcept;

struct IdentitySpec {
  IdentityKind kind = IdentityKind::Variance;
  int ell = 0;
  /// Anchor for SolvedRecursion; defaults to the grid midpoint.
  std::optional<double> anchor;

  /// "Variance", "MomentRecursion(2)", "SolvedRecursion(1)".
  std::string label() const;
};

/// Parses "Kind" or "Kind(ell)" or "SolvedRecursion(ell, a)". A bare ordered
/// kind yields ell = 0, meaning "every order" to expand_selection.
IdentitySpec parse_identity(std::string_view text);

/// Specs run by verify_all for the given maximum order, in report order.
std::vector<IdentitySpec> default_suite(int max_order);

/// "all", a kind name (every order of that kind) or a single spec.
std::vector<IdentitySpec> expand_selection(std::string_view selection, int max_order);

/// 1e-6 for one finite-difference order, 1e-4 for two, 1e-3 for three or more.
double default_tolerance(const IdentitySpec& spec);

/// Per-label or per-kind tolerance overrides ("MomentRecursion(2)" beats
/// "MomentRecursion").
struct Tolerances {
  std::map<std::string, double> overrides;
  double lookup(const IdentitySpec& spec) const;
};

struct VerifyOptions {
  FdPolicy policy;
  Tolerances tolerances;
  int max_order = 3;
  YQuadratureOptions mmse;
  /// Default SolvedRecursion anchor (grid midpoint when absent).
  std::optional<double> anchor;
};

struct IdentityReport {
  std::string kind;  // label
  std::string scenario;
  double tolerance = 0.0;
  double max_residual = 0.0;
  bool pass = false;
  bool skipped = false;
  std::string skip_reason;
  std::vector<Vector> points;
  std::vector<Vector> lhs;
  std::vector<Vector> rhs;
  std::vector<double> residual;  // NaN where excluded or failed
  std::vector<bool> excluded;
  std::vector<double> fd_error;  // NaN unless the scheme estimates it
  std::vector<std::string> errors;  // empty string where the point succeeded
  std::vector<std::string> notes;

  std::size_t failed_points() const;
  std::size_t excluded_points() const;
  /// One line: "PASS Variance max_residual=1.2e-09 tol=1e-06 points=61".
  std::string summary() const;
};

/// Empty when the identity applies; otherwise the reason it does not.
std::string incompatibility(const IdentitySpec& spec, const Scenario& scenario, const Grid& grid,
                            int max_order = kMaxMomentOrder);

/// Computes both sides at every grid point. Throws ShapeMismatch when the
/// scenario cannot host the identity; per-point numerical failures are
/// recorded in the report.
IdentityReport verify(const IdentitySpec& spec, const Scenario& scenario, const Grid& grid,
                      const VerifyOptions& options);

/// Runs the given specs, recording incompatible ones as skipped.
std::vector<IdentityReport> verify_specs(const std::vector<IdentitySpec>& specs,
                                         const Scenario& scenario, const Grid& grid,
                                         const VerifyOptions& options);

/// verify_specs over default_suite(options.max_order).
std::vector<IdentityReport> verify_all(const Scenario& scenario, const Grid& grid,
                                       const VerifyOptions& options);

std::string reports_to_json(const std::string& scenario, const std::vector<IdentityReport>& reports);
/// kind,point,y0..,side,component... one row per point and component.
std::string reports_to_csv(const std::vector<IdentityReport>& reports);

}  // namespace tweedie
