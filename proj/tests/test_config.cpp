#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "icollapse/icollapse.hpp"
#include "icollapse/scenarios.hpp"

using namespace icollapse;

namespace {

std::vector<RunConfig> all_presets() {
  std::vector<RunConfig> out;
  for (const auto& [kind, name] : scenario_names()) out.push_back(preset(kind));
  out.push_back(preset_angular_momentum());
  return out;
}

std::string config_error_key(const std::string& text) {
  try {
    parse_config_string(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("icollapse_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("presets are valid and round-trip through JSON", "[config]") {
  for (const RunConfig& c : all_presets()) {
    CHECK_NOTHROW(validate(c));
    CHECK(c.numerics.gain == c.physics.kappa);
    const RunConfig back = parse_config_string(serialize(c));
    CHECK(back == c);
    CHECK(serialize(back) == serialize(c));
  }
}

TEST_CASE("random configurations round-trip", "[config]") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    RunConfig c = preset(ScenarioKind::WalkScan);
    c.physics.kappa = u(rng) * 50.0;
    c.physics.c = 0.1 + u(rng) * 10.0;
    c.numerics.dt = 1e-4 + u(rng) * 0.1;
    c.numerics.n_steps = static_cast<long>(u(rng) * 1000);
    c.numerics.theta_abs = 1e-6 + u(rng) * 0.1;
    c.numerics.real_noise = u(rng) < 0.5;
    c.ensemble.master_seed = rng();
    c.ensemble.n_traj = 1 + static_cast<long>(u(rng) * 1e6);
    c.walk.step_scale = 0.01 + u(rng) * 0.5;
    c.walk.starts = {u(rng) * 0.9 + 0.05, u(rng) * 0.9 + 0.05};
    if (u(rng) < 0.5) c.walk.theta = 1e-3 + u(rng) * 0.1;
    c.eraser.epsilons = {u(rng) * 0.4};
    c.thermal.input.temperature = u(rng) * 1000.0;
    c.numerics.gain = c.physics.kappa;
    const RunConfig back = parse_config_string(serialize(c));
    CHECK(back == c);
    CHECK(back.numerics.gain == back.physics.kappa);
    CHECK(config_hash(back) == config_hash(c));
  }
}

TEST_CASE("config errors name the offending key", "[config]") {
  CHECK(config_error_key(R"({"scenario": "thermal", "physics": {"foo": 1}})") == "physics.foo");
  CHECK(config_error_key(R"({"scenario": "thermal", "bar": 1})") == "bar");
  CHECK(config_error_key(R"({"scenario": "thermal", "physics": {"kappa": "big"}})") == "physics.kappa");
  CHECK(config_error_key(R"({"scenario": "thermal", "ensemble": {"n_traj": 1.5}})") == "ensemble.n_traj");
  CHECK(config_error_key(R"({"scenario": "thermal", "ensemble": {"master_seed": -1}})") == "ensemble.master_seed");
  CHECK(config_error_key(R"({"physics": {}})") == "scenario");
  CHECK(config_error_key(R"({"scenario": "nope"})") == "scenario");
  CHECK(config_error_key(R"({"scenario": "thermal", )") == "<file>");
  CHECK(config_error_key(R"({"scenario": "walk_scan", "walk": {"starts": [0.5, 1.0]}})") == "walk.starts");
  CHECK(config_error_key(R"({"scenario": "thermal", "physics": {"particles": [{"mass": 1, "spin": 2}]}})") ==
        "physics.particles[0].spin");
  CHECK(config_error_key(R"({"scenario": "two_level_collapse", "backend": "grid"})") == "backend");
  CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("stencil time step beyond the stability bound is rejected", "[config]") {
  RunConfig c = preset(ScenarioKind::GridScattering);
  c.numerics.dt = 1.0;
  try {
    validate(c);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "numerics.dt");
  }
  c.numerics.scheme = Scheme::SplitStepSpectral;
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("config hash is stable and sensitive", "[config]") {
  const RunConfig a = preset(ScenarioKind::Eraser);
  const std::string h = config_hash(a);
  CHECK(h.size() == 16);
  CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(config_hash(preset(ScenarioKind::Eraser)) == h);
  RunConfig b = a;
  b.ensemble.master_seed += 1;
  CHECK(config_hash(b) != h);
  CHECK(config_hash(preset(ScenarioKind::WalkScan)) != h);
}

TEST_CASE("numbers are written in shortest round-trip form", "[config]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> e(-300.0, 300.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::pow(10.0, e(rng)) * (i % 2 ? -1.0 : 1.0);
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(100.0) == "100");
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
}

TEST_CASE("CSV tables carry the metadata header", "[config]") {
  CsvTable t({"x", "y"});
  t.add_row({1.0, 0.25});
  t.add_row(std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(t.add_row(std::vector<double>{1.0}), std::invalid_argument);
  ArtifactMeta meta{"walk_scan", "0123456789abcdef", 42, kArtifactVersion, true};
  const std::string text = t.render(meta);
  CHECK(text ==
        "# scenario=walk_scan\n# config_hash=0123456789abcdef\n# seed=42\n# artifact_version=1\n"
        "# partial=true\nx,y\n1,0.25\na,b\n");
  const Json j = Json::parse(render_report(meta, Json{{"value", 1}}));
  CHECK(j["meta"]["seed"] == 42);
  CHECK(j["meta"]["partial"] == true);
}

TEST_CASE("runs write byte-identical artifacts", "[config]") {
  RunConfig c = preset(ScenarioKind::WalkScan);
  c.ensemble.n_traj = 500;
  c.walk.starts = {0.3, 0.7};
  std::vector<std::string> texts[2];
  for (int k = 0; k < 2; ++k) {
    const auto dir = fresh_dir("repro" + std::to_string(k));
    c.output.directory = dir.string();
    const RunOutcome out = run(c);
    CHECK(out.exit_code == kExitOk);
    REQUIRE(out.artifacts.size() == 2);
    for (const auto& p : out.artifacts) texts[k].push_back(slurp(p));
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      CHECK(entry.path().extension() != ".tmp");
    std::filesystem::remove_all(dir);
  }
  // the output directory is part of the config, so the embedded config and
  // hash differ; compare the tables after their header lines
  auto body = [](const std::string& s) { return s.substr(s.find("\nstart,")); };
  CHECK(body(texts[0][1]) == body(texts[1][1]));

  const auto dir = fresh_dir("repro_same");
  c.output.directory = dir.string();
  const RunOutcome a = run(c);
  std::vector<std::string> first;
  for (const auto& p : a.artifacts) first.push_back(slurp(p));
  const RunOutcome b = run(c);
  for (std::size_t i = 0; i < b.artifacts.size(); ++i) CHECK(slurp(b.artifacts[i]) == first[i]);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run summary reports the headline statistic", "[config]") {
  RunConfig c = preset(ScenarioKind::Thermal);
  const auto dir = fresh_dir("thermal");
  c.output.directory = dir.string();
  const RunOutcome out = run(c);
  CHECK(out.summary.find("thermal n_traj=1 joules_per_year=") == 0);
  const Json j = Json::parse(slurp(dir / "thermal.json"));
  CHECK(j["meta"]["config_hash"] == config_hash(c));
  CHECK(j["config"]["scenario"] == "thermal");
  CHECK(j["step_count"]["estimate"] == 1e6);
  std::filesystem::remove_all(dir);
  c.physics.kappa = -1.0;
  CHECK_THROWS_AS(run(c), ConfigError);
}

TEST_CASE("shipped configs equal the presets", "[config]") {
  const std::filesystem::path root = std::filesystem::path(ICOLLAPSE_SOURCE_DIR) / "configs";
  std::vector<std::pair<std::string, RunConfig>> expected;
  for (const auto& [kind, name] : scenario_names()) expected.emplace_back(name, preset(kind));
  expected.emplace_back("conservation_lz", preset_angular_momentum());
  for (const auto& [name, c] : expected) {
    INFO(name);
    const auto path = root / (name + ".json");
    REQUIRE(std::filesystem::exists(path));
    CHECK(parse_config(path.string()) == c);
  }
}
