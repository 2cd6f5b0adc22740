#include <CLI11.hpp>

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "icollapse/scenarios.hpp"

namespace {

using namespace icollapse;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<long> traj;

  void attach(CLI::App* app) {
    app->add_option("--seed", seed, "master seed");
    app->add_option("--out-dir", out_dir, "output directory");
    app->add_option("--traj", traj, "number of trajectories (walks per point for walk-scan)");
  }

  void apply(RunConfig& c) const {
    if (seed) c.ensemble.master_seed = *seed;
    if (out_dir) c.output.directory = *out_dir;
    if (traj) c.ensemble.n_traj = *traj;
    validate(c);
  }
};

int execute(RunConfig c, const Overrides& o) {
  o.apply(c);
  const RunOutcome out = run(c);
  std::cout << out.summary << "\n";
  return out.exit_code;
}

RunConfig load_or_preset(const std::string& path, ScenarioKind kind) {
  if (path.empty()) return preset(kind);
  RunConfig c = parse_config(path);
  if (c.scenario != kind)
    throw ConfigError("scenario", "expected " + scenario_name(kind) + ", found " + scenario_name(c.scenario));
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic collapse simulations: configurable scenarios with reproducible artifacts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ICOLLAPSE_VERSION));

  std::string config_path;
  Overrides overrides;
  int status = 0;
  std::function<int()> action;

  auto* run_cmd = app.add_subcommand("run", "run the scenario described by a config file");
  run_cmd->add_option("config", config_path, "config file")->required();
  overrides.attach(run_cmd);
  run_cmd->callback([&] { action = [&] { return execute(parse_config(config_path), overrides); }; });

  auto* validate_cmd = app.add_subcommand("validate", "parse and check a config file");
  validate_cmd->add_option("config", config_path, "config file")->required();
  validate_cmd->callback([&] {
    action = [&] {
      const RunConfig c = parse_config(config_path);
      std::cout << "valid scenario=" << scenario_name(c.scenario) << " config_hash=" << config_hash(c) << "\n";
      return 0;
    };
  });

  auto scenario_cmd = [&](const char* name, const char* help, ScenarioKind kind) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", config_path, "config file (default: shipped preset)");
    overrides.attach(cmd);
    return std::pair{cmd, kind};
  };

  double step_scale = 0.0;
  auto [walk_cmd, walk_kind] = scenario_cmd("walk-scan", "absorption probability against starting weight",
                                            ScenarioKind::WalkScan);
  walk_cmd->add_option("--step-scale", step_scale, "per-step kick scale s");
  walk_cmd->callback([&, kind = walk_kind] {
    action = [&, kind] {
      RunConfig c = load_or_preset(config_path, kind);
      if (step_scale > 0.0) c.walk.step_scale = step_scale;
      return execute(c, overrides);
    };
  });

  std::string kick_mode;
  auto [eraser_cmd, eraser_kind] =
      scenario_cmd("eraser", "cross-term probability of the quantum eraser", ScenarioKind::Eraser);
  eraser_cmd->add_option("--mode", kick_mode, "coherent, random_sign, gaussian or full_sde");
  eraser_cmd->callback([&, kind = eraser_kind] {
    action = [&, kind] {
      RunConfig c = load_or_preset(config_path, kind);
      if (!kick_mode.empty()) c.eraser.mode = detail::Section::to_enum(Json(kick_mode), "eraser.mode", kick_mode_names());
      return execute(c, overrides);
    };
  });

  auto [thermal_cmd, thermal_kind] =
      scenario_cmd("thermal", "order-of-magnitude heating and step-count estimates", ScenarioKind::Thermal);
  thermal_cmd->callback([&, kind = thermal_kind] {
    action = [&, kind] { return execute(load_or_preset(config_path, kind), overrides); };
  });

  bool angular = false;
  auto [conserve_cmd, conserve_kind] =
      scenario_cmd("conserve", "grid refinement study of momentum or angular momentum", ScenarioKind::ConservationSuite);
  conserve_cmd->add_flag("--angular", angular, "use the two-dimensional angular momentum preset");
  conserve_cmd->callback([&, kind = conserve_kind] {
    action = [&, kind] {
      RunConfig c = config_path.empty() && angular ? preset_angular_momentum() : load_or_preset(config_path, kind);
      return execute(c, overrides);
    };
  });

  std::string preset_name;
  auto* preset_cmd = app.add_subcommand("preset", "print a shipped configuration");
  preset_cmd->add_option("name", preset_name, "scenario name or conservation_lz")->required();
  preset_cmd->callback([&] {
    action = [&] {
      if (preset_name == "conservation_lz") {
        std::cout << serialize(preset_angular_momentum());
        return 0;
      }
      const ScenarioKind k = detail::Section::to_enum(Json(preset_name), "name", scenario_names());
      std::cout << serialize(preset(k));
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    status = action();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
