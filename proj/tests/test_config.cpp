#include <doctest.h>

#include <filesystem>
#include <string>
#include <tweedie/config.hpp>
#include <tweedie/error.hpp>

namespace tweedie {
namespace {

const std::string kMinimal = R"({
  "name": "mini",
  "model": {"name": "GaussianKnownVariance", "params": {"variance": 1.0}},
  "prior": {"type": "discrete", "atoms": [{"x": -1.0, "w": 0.5}, {"x": 1.0, "w": 0.5}]},
  "grid": {"min": -1.0, "max": 1.0, "count": 5}
})";

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "doc.json");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    return e.what();
  }
  FAIL("no exception");
  return {};
}

std::string with(const std::string& key_value) {
  std::string text = kMinimal;
  text.insert(text.rfind('}'), ",\n  " + key_value + "\n");
  return text;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("minimal document fills defaults") {
  const ScenarioConfig c = parse_config(kMinimal, "doc.json");
  CHECK(c.scenario->name() == "mini");
  CHECK(c.grid.size() == 5);
  CHECK(c.grid[4](0) == doctest::Approx(1.0));
  CHECK(c.scenario->prior_atoms().size() == 2);
  CHECK(c.verify.policy.scheme == FdPolicy{}.scheme);
  CHECK(c.verify.max_order == 3);
  CHECK_FALSE(c.verify.anchor.has_value());
  CHECK(c.eb.n == 100000);
}

TEST_CASE("optional sections are read") {
  const ScenarioConfig c = parse_config(
      with(R"("fd_policy": {"scheme": "central-2", "step": 1e-5, "step_rule": "fixed", "sing_margin": 0.01},
  "tolerances": {"Variance": 1e-3},
  "max_order": 2, "anchor": 0.25,
  "eb": {"n": 500, "seed": 9, "ell_max": 2, "mae_threshold": 0.1, "bandwidth": 0.3})"),
      "doc.json");
  CHECK(c.verify.policy.scheme == FdScheme::Central2);
  CHECK(c.verify.policy.base_step == 1e-5);
  CHECK(c.verify.policy.step_rule == StepRule::Fixed);
  CHECK(c.verify.policy.sing_margin == 0.01);
  CHECK(c.verify.tolerances.lookup(parse_identity("Variance")) == 1e-3);
  CHECK(c.verify.max_order == 2);
  CHECK(*c.verify.anchor == 0.25);
  CHECK(c.eb.n == 500);
  CHECK(c.eb.seed == 9);
  CHECK(c.eb.ell_max == 2);
  CHECK(c.eb.mae_threshold == std::vector<double>{0.1});
  CHECK(*c.eb.bandwidth == 0.3);
}

TEST_CASE("errors name the offending JSON pointer") {
  CHECK(contains(config_error(with(R"("max_order": 9)")), "doc.json: /max_order:"));
  CHECK(contains(config_error(with(R"("colour": 1)")), "/colour: unknown field"));
  std::string bad_model = kMinimal;
  bad_model.replace(bad_model.find("1.0}}"), 3, "\"x\"");
  CHECK(contains(config_error(bad_model), "/model/params/variance"));
  CHECK(contains(config_error(with(R"("tolerances": {"Variance": 0})")), "/tolerances/Variance"));
  CHECK(contains(config_error(with(R"("u_map": {"kind": "cube"})")), "/u_map/kind"));
  std::string no_grid = kMinimal;
  no_grid.erase(no_grid.find(",\n  \"grid\""));
  no_grid += "}";
  CHECK(contains(config_error(no_grid), "/grid: missing required field"));
}

TEST_CASE("syntax errors report a line number") {
  std::string text = kMinimal;
  text.insert(text.find("\"prior\""), "oops ");
  CHECK(contains(config_error(text), "doc.json: line 4"));
}

TEST_CASE("missing file names the path") {
  try {
    load_config("/nonexistent/where.json");
    FAIL("no exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(contains(e.what(), "/nonexistent/where.json"));
  }
}

TEST_CASE("shipped configs load") {
  int loaded = 0;
  for (const auto& entry : std::filesystem::directory_iterator(TWEEDIE_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const ScenarioConfig c = load_config(entry.path());
    CHECK(c.grid.size() > 0);
    CHECK(c.scenario->dim_u() >= 1);
    ++loaded;
  }
  CHECK(loaded >= 8);
}

}  // namespace tweedie
