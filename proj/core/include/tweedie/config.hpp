#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tweedie/engine.hpp"
#include "tweedie/identities.hpp"
#include "tweedie/measures.hpp"

namespace tweedie {

struct EbConfig {
  std::size_t n = 100000;
  std::uint64_t seed = 1;
  int ell_max = 1;
  std::optional<Grid> grid;  // defaults to the scenario grid
  /// Per-ell MAE thresholds on the KDE estimate (index 0 is ell = 1).
  std::vector<double> mae_threshold;
  std::optional<double> bandwidth;
};

struct ConfigOverrides {
  bool paper_erratum_mode = false;
};

/// A parsed scenario document. See README for the schema.
struct ScenarioConfig {
  std::shared_ptr<const Scenario> scenario;
  Grid grid;
  VerifyOptions verify;
  EbConfig eb;
};

/// Parses a JSON document; `origin` prefixes error messages. Errors carry
/// ConfigError with a JSON pointer (or line/column for syntax errors).
ScenarioConfig parse_config(const std::string& text, const std::string& origin,
                            const ConfigOverrides& overrides = {});

/// Reads and parses a file; a missing file raises ConfigError naming the path.
ScenarioConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

}  // namespace tweedie
