#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "icollapse/io.hpp"

namespace icollapse {

/// Everything a scenario produces before anything touches the disk.
struct ScenarioResult {
  Json report = Json::object();
  std::vector<std::pair<std::string, CsvTable>> tables;  // file stem suffix, table
  long n_traj = 1;
  std::string statistic;  // name of the headline number
  double value = 0.0;
  bool partial = false;   // a trajectory aborted
  std::string status = "ok";
};

// ---------------------------------------------------------------------------
// Model builders

inline GridModel grid_model(const RunConfig& c, const GridSpec& grid) {
  GridModel m;
  m.grid = grid;
  m.particles = c.physics.particles;
  m.c = c.physics.c;
  if (m.particles.size() >= 2) m.pairs.push_back(c.physics.potential.pair(0, 1));
  return m;
}

inline HilbertState initial_grid_state(const InitialConfig& i, const GridModel& m) {
  const GridBasis basis{m.grid, m.particles};
  if (i.kind == "two_body") return two_body_gaussian(basis, i.packet);
  return product_gaussian(basis, i.center, i.width, i.momentum);
}

inline FiniteModel two_level_model(const TwoLevelConfig& t, double c) {
  FiniteModel m;
  m.labels = {"I", "O"};
  m.hamiltonian = Eigen::MatrixXcd::Zero(2, 2);
  m.c = c;
  FiniteChannel ch;
  ch.potential = RealVector::Zero(2);
  ch.potential[0] = t.gap;
  ch.mass_j = ch.mass_k = 0.5 * t.mass_sum;
  ch.gamma = t.gamma;
  m.channels.push_back(ch);
  return m;
}

inline HilbertState two_level_state(const Dynamics& dyn, double weight) {
  ComplexVector a(2);
  a << std::sqrt(weight), std::sqrt(1.0 - weight);
  return dyn.make_state(std::move(a));
}

/// Per-step RMS push on the interacting weight of the two-level model at
/// weight x is x (1 - x) times this.
inline double two_level_push(const TwoLevelConfig& t, const RunConfig& c) {
  const double strength =
      c.physics.kappa * std::sqrt(t.gamma) * std::abs(t.gap) / (t.mass_sum * c.physics.c * c.physics.c);
  return matched_step_scale(strength, c.numerics.dt, c.numerics.real_noise);
}

/// Standard deviation of |psi|^2 along one grid axis; the packet is assumed
/// to stay clear of the box edges.
inline double coordinate_spread(const HilbertState& s, int axis) {
  const GridLayout& L = s.layout();
  const RealVector rho = s.amplitudes().cwiseAbs2();
  const double total = rho.sum();
  double m1 = 0.0, m2 = 0.0;
  for (Index i = 0; i < rho.size(); ++i) {
    const double x = L.coordinate(L.coordinate_index(i, axis));
    m1 += rho[i] * x;
    m2 += rho[i] * x * x;
  }
  m1 /= total;
  m2 /= total;
  return std::sqrt(std::max(0.0, m2 - m1 * m1));
}

/// sigma0 sqrt(1 + (t / (2 m sigma0^2))^2).
inline double free_packet_width(double sigma0, double mass, double t) {
  const double tau = t / (2.0 * mass * sigma0 * sigma0);
  return sigma0 * std::sqrt(1.0 + tau * tau);
}

// ---------------------------------------------------------------------------
// Scenarios

inline ScenarioResult run_free_packet(const RunConfig& c) {
  const GridModel m = grid_model(c, c.grid);
  const Dynamics dyn(m, c.numerics.scheme, c.numerics.dt);
  const HilbertState psi0 = initial_grid_state(c.initial, m);
  IntegratorConfig ic = c.numerics;
  ic.stop_on_absorption = false;
  const double sigma0 = c.initial.kind == "product" ? c.initial.width[0] : coordinate_spread(psi0, 0);
  const double mass = m.particles[0].mass;

  CsvTable table({"step", "time", "width", "analytic", "abs_error"});
  double max_err = 0.0;
  auto row = [&](long step, const HilbertState& s) {
    const double w = coordinate_spread(s, 0), a = free_packet_width(sigma0, mass, s.time());
    max_err = std::max(max_err, std::abs(w - a));
    table.add_row({static_cast<double>(step), s.time(), w, a, std::abs(w - a)});
  };
  row(0, psi0);
  const TrajectoryRecord rec = run_trajectory(psi0, dyn, ic, c.ensemble.master_seed, 0, [&](const StepContext& ctx) {
    if (ctx.step % ic.record_every == 0 || ctx.step == ic.n_steps) row(ctx.step, ctx.after);
  });

  ScenarioResult r;
  r.partial = rec.aborted;
  r.statistic = "max_width_error";
  r.value = max_err;
  r.report = {{"trajectory", trajectory_json(rec)},
              {"initial_width", sigma0},
              {"max_width_error", max_err},
              {"n_steps", rec.steps_taken}};
  r.tables.emplace_back("widths", std::move(table));
  r.tables.emplace_back("trajectory", trajectory_csv(rec));
  return r;
}

inline ScenarioResult run_two_level(const RunConfig& c) {
  const Dynamics dyn(two_level_model(c.two_level, c.physics.c), c.numerics.scheme, c.numerics.dt);
  const HilbertState psi0 = two_level_state(dyn, c.two_level.initial_weight);
  const EnsembleResult e = run_ensemble(psi0, dyn, c.numerics, c.ensemble.n_traj, c.ensemble.master_seed);
  const double push = two_level_push(c.two_level, c);

  CsvTable table({"time", "weight_mean", "weight_stderr"});
  for (std::size_t i = 0; i < e.times.size(); ++i) table.add_row({e.times[i], e.weight_mean[i], e.weight_stderr[i]});

  auto binom = [](const BinomialEstimate& b) {
    return Json{{"count", b.successes}, {"p", b.p}, {"sigma", b.sigma}, {"ci_low", b.ci_low}, {"ci_high", b.ci_high}};
  };
  ScenarioResult r;
  r.n_traj = e.n_traj;
  r.partial = e.aborted > 0;
  r.statistic = "to_I_frequency";
  r.value = e.to_interacting.p;
  r.report = {{"n_traj", e.n_traj},
              {"initial_weight", e.initial_weight},
              {"to_I", binom(e.to_interacting)},
              {"to_O", binom(e.to_noninteracting)},
              {"unabsorbed", e.unabsorbed},
              {"aborted", e.aborted},
              {"mean_steps", e.mean_steps},
              {"steps_stderr", e.steps_stderr},
              {"predicted_mean_steps", mean_absorption_steps(e.initial_weight, push, c.numerics.theta_abs)},
              {"step_push", push},
              {"max_martingale_z", e.max_martingale_z},
              {"max_norm_drift", e.max_norm_drift},
              {"mean_norm_drift", e.mean_norm_drift}};
  r.tables.emplace_back("martingale", std::move(table));
  return r;
}

inline ScenarioResult run_grid_scattering(const RunConfig& c) {
  const GridModel m = grid_model(c, c.grid);
  const Dynamics dyn(m, c.numerics.scheme, c.numerics.dt);
  const HilbertState psi0 = initial_grid_state(c.initial, m);
  ConservationOptions opts;
  opts.quantity = ConservedQuantity::Momentum;
  opts.residual_scheme = dyn.derivative_scheme();
  opts.energy_terms = true;
  const ConservationRun run = run_conservation(psi0, dyn, c.numerics, c.ensemble.master_seed, opts);

  const double mass = m.particles[0].mass + m.particles[1].mass;
  const double dke = run.kinetic_energy_change();
  const DeviationBenchmark bench = deviation_ratio_benchmark(dke, mass, c.physics.c);
  const double conversion = dke > 0.0 ? run.deviation_rms / dke : 0.0;
  const double factor = bench.ratio > 0.0 ? conversion / bench.ratio : 0.0;

  CsvTable terms({"step", "kinetic_energy", "middle_re", "middle_im", "positive_term"});
  terms.add_row({0.0, run.kinetic_energy.front(), 0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < run.positive_terms.size(); ++i)
    terms.add_row({static_cast<double>(i + 1), run.kinetic_energy[i + 1], run.middle_coefficients[i].real(),
                   run.middle_coefficients[i].imag(), run.positive_terms[i]});

  ScenarioResult r;
  r.statistic = "deviation_over_benchmark";
  r.value = factor;
  r.report = {{"trajectory", trajectory_json(run.record)},
              {"kinetic_energy_change", dke},
              {"deviation_rms", run.deviation_rms},
              {"deviation_to_conversion", conversion},
              {"benchmark_ratio", bench.ratio},
              {"benchmark_first_order", bench.first_order},
              {"benchmark_second_order", bench.second_order},
              {"benchmark_radiative", bench.radiative},
              {"benchmark_antiparticle", bench.antiparticle},
              {"deviation_over_benchmark", factor},
              {"min_positive_term", run.min_positive_term},
              {"momentum_drift", run.report.drift},
              {"momentum_cumulative_drift", run.report.cumulative_drift},
              {"max_identity_residual", run.report.max_residual()}};
  r.tables.emplace_back("trajectory", trajectory_csv(run.record));
  r.tables.emplace_back("energy_terms", std::move(terms));
  return r;
}

/// One refinement pair of a conservation study.
struct RefinementRow {
  double kappa = 0.0;
  ConservationReport coarse, fine;
  double residual_ratio = 0.0;
  double drift_ratio = 0.0;
  bool pass = false;
};

struct SpectralRow {
  double kappa = 0.0;
  ConservationReport report;
  bool pass = false;
};

struct ConservationSuite {
  std::vector<RefinementRow> refinement;
  std::vector<SpectralRow> spectral;
  bool pass() const {
    for (const auto& r : refinement)
      if (!r.pass) return false;
    for (const auto& s : spectral)
      if (!s.pass) return false;
    return true;
  }
};

inline ConservationReport conservation_report(const RunConfig& c, const GridSpec& grid, const InitialConfig& init,
                                              Scheme scheme, long n_steps, double kappa) {
  const GridModel m = grid_model(c, grid);
  const Dynamics dyn(m, scheme, c.numerics.dt);
  IntegratorConfig ic = c.numerics;
  ic.scheme = scheme;
  ic.n_steps = n_steps;
  ic.gain = kappa;
  ConservationOptions opts;
  opts.quantity = c.conservation.quantity;
  opts.residual_scheme = dyn.derivative_scheme();
  opts.residual_every = c.conservation.residual_every;
  ConservationReport rep =
      run_conservation(initial_grid_state(init, m), dyn, ic, c.ensemble.master_seed, opts).report;
  rep.config_hash = config_hash(c);
  return rep;
}

/// Refinement h -> h/2 at every kappa plus the spectral variant. The same
/// seed drives both resolutions, so the noise paths coincide.
inline ConservationSuite conservation_suite(const RunConfig& c) {
  const ConservationConfig& k = c.conservation;
  ConservationSuite suite;
  GridSpec fine = c.grid;
  fine.points_per_axis *= 2;
  auto in_band = [&](double x) { return x >= k.ratio_min && x <= k.ratio_max; };
  for (double kappa : k.kappas) {
    RefinementRow row;
    row.kappa = kappa;
    row.coarse = conservation_report(c, c.grid, c.initial, c.numerics.scheme, c.numerics.n_steps, kappa);
    row.fine = conservation_report(c, fine, c.initial, c.numerics.scheme, c.numerics.n_steps, kappa);
    row.residual_ratio = refinement_ratio(row.coarse.max_relative_residual(), row.fine.max_relative_residual());
    row.drift_ratio = refinement_ratio(row.coarse.cumulative_drift, row.fine.cumulative_drift);
    row.pass = in_band(row.residual_ratio) && in_band(row.drift_ratio);
    suite.refinement.push_back(row);

    SpectralRow s;
    s.kappa = kappa;
    s.report = conservation_report(c, k.spectral_grid, k.spectral_initial, Scheme::SplitStepSpectral,
                                   k.spectral_steps, kappa);
    s.pass = s.report.max_residual() < k.spectral_tolerance;
    suite.spectral.push_back(s);
  }
  return suite;
}

inline ScenarioResult run_conservation_suite(const RunConfig& c) {
  const ConservationSuite suite = conservation_suite(c);
  CsvTable table({"kappa", "scheme", "points", "spacing", "max_residual", "max_relative_residual", "drift",
                  "cumulative_drift"});
  auto add = [&](double kappa, const char* scheme, int points, const ConservationReport& r) {
    table.add_row({format_number(kappa), scheme, std::to_string(points), format_number(r.spacing),
                   format_number(r.max_residual()), format_number(r.max_relative_residual()),
                   format_number(r.drift), format_number(r.cumulative_drift)});
  };
  const std::string main_scheme = name_of(scheme_names(), c.numerics.scheme);
  Json refinement = Json::array(), spectral = Json::array();
  for (const auto& row : suite.refinement) {
    add(row.kappa, main_scheme.c_str(), c.grid.points_per_axis, row.coarse);
    add(row.kappa, main_scheme.c_str(), 2 * c.grid.points_per_axis, row.fine);
    refinement.push_back({{"kappa", row.kappa},
                          {"coarse_relative_residual", row.coarse.max_relative_residual()},
                          {"fine_relative_residual", row.fine.max_relative_residual()},
                          {"coarse_cumulative_drift", row.coarse.cumulative_drift},
                          {"fine_cumulative_drift", row.fine.cumulative_drift},
                          {"coarse_drift", row.coarse.drift},
                          {"fine_drift", row.fine.drift},
                          {"residual_ratio", row.residual_ratio},
                          {"drift_ratio", row.drift_ratio},
                          {"pass", row.pass}});
  }
  for (const auto& s : suite.spectral) {
    add(s.kappa, "split_step_spectral", c.conservation.spectral_grid.points_per_axis, s.report);
    spectral.push_back({{"kappa", s.kappa},
                        {"max_residual", s.report.max_residual()},
                        {"max_relative_residual", s.report.max_relative_residual()},
                        {"pass", s.pass}});
  }
  ScenarioResult r;
  r.status = suite.pass() ? "pass" : "fail";
  r.statistic = "status";
  r.value = suite.pass() ? 1.0 : 0.0;
  r.report = {{"quantity", to_string(c.conservation.quantity)},
              {"status", r.status},
              {"tolerances",
               {{"ratio_min", c.conservation.ratio_min},
                {"ratio_max", c.conservation.ratio_max},
                {"spectral_tolerance", c.conservation.spectral_tolerance}}},
              {"refinement", refinement},
              {"spectral", spectral}};
  r.tables.emplace_back("refinement", std::move(table));
  return r;
}

inline ScenarioResult run_eraser(const RunConfig& c) {
  EraserConfig base;
  base.n_traj = c.ensemble.n_traj;
  base.seed = c.ensemble.master_seed;
  base.mode = c.eraser.mode;
  base.amplitude_interacting = c.eraser.amplitude_interacting;
  base.amplitude_noninteracting = std::sqrt(1.0 - c.eraser.amplitude_interacting * c.eraser.amplitude_interacting);
  base.sde_dt = c.eraser.sde_dt;
  base.sde_steps = c.eraser.sde_steps;
  const EraserSweep sweep = eraser_sweep(base, c.eraser.epsilons);
  const EraserBound bound = eraser_bound_check(c.eraser.bound_ratio);

  CsvTable table({"epsilon", "cross_probability", "cross_stderr", "sampled_cross", "sampled_sigma", "SS", "SA", "AS",
                  "AA"});
  for (const auto& p : sweep.points)
    table.add_row({p.epsilon, p.cross_probability, p.cross_stderr, p.sampled_cross.p, p.sampled_cross.sigma,
                   p.correlation(0, 0), p.correlation(0, 1), p.correlation(1, 0), p.correlation(1, 1)});

  ScenarioResult r;
  r.n_traj = c.ensemble.n_traj;
  r.statistic = "log_log_slope";
  r.value = sweep.log_fit.slope;
  r.report = {{"mode", to_string(c.eraser.mode)},
              {"log_log_slope", sweep.log_fit.slope},
              {"slope_se", sweep.log_fit.slope_se},
              {"intercept", sweep.log_fit.intercept},
              {"r_squared", sweep.log_fit.r_squared},
              {"bound",
               {{"ratio", bound.ratio},
                {"probability", bound.probability},
                {"nonrelativistic", bound.nonrelativistic},
                {"within_bound", bound.within_bound}}}};
  r.tables.emplace_back("sweep", std::move(table));
  return r;
}

inline ScenarioResult run_walk_scan(const RunConfig& c) {
  ScanOptions opts;
  opts.mode = c.walk.mode;
  if (c.walk.theta) opts.theta = *c.walk.theta;
  const ScanTable t =
      born_linearity_scan(c.walk.step_scale, c.walk.starts, c.ensemble.n_traj, c.ensemble.master_seed, opts);
  CsvTable table({"start", "p_interacting", "sigma", "ci_low", "ci_high", "unabsorbed", "mean_steps"});
  for (const auto& row : t.rows)
    table.add_row({row.start, row.hits.p, row.hits.sigma, row.hits.ci_low, row.hits.ci_high,
                   static_cast<double>(row.unabsorbed), row.mean_steps});
  ScenarioResult r;
  r.n_traj = c.ensemble.n_traj;
  r.statistic = "slope";
  r.value = t.fit.slope;
  r.report = {{"step_scale", t.step_scale},
              {"theta", t.theta},
              {"mode", name_of(step_mode_names(), t.mode)},
              {"walks_per_point", t.walks_per_point},
              {"slope", t.fit.slope},
              {"slope_se", t.fit.slope_se},
              {"intercept", t.fit.intercept},
              {"intercept_se", t.fit.intercept_se},
              {"r_squared", t.fit.r_squared}};
  r.tables.emplace_back("scan", std::move(table));
  return r;
}

inline ScenarioResult run_thermal(const RunConfig& c) {
  const ThermalEstimate e = thermal_estimate(c.thermal.input);
  const StepCountEstimate s = step_count_estimate(c.thermal.step_ratio, c.thermal.step_floor);
  const double tau = characteristic_time_ev(c.thermal.characteristic_energy_ev);
  ScenarioResult r;
  r.statistic = "joules_per_year";
  r.value = e.joules_per_year;
  r.report = {{"interaction_energy_J", e.interaction_energy},
              {"rest_energy_J", e.rest_energy},
              {"ratio", e.ratio},
              {"collision_rate_per_s", e.collision_rate},
              {"fractional_rate_per_s", e.fractional_rate},
              {"thermal_energy_J", e.thermal_energy},
              {"joules_per_year", e.joules_per_year},
              {"step_count",
               {{"ratio", s.ratio},
                {"floor", s.floor},
                {"estimate", s.estimate},
                {"constant_step_mean", s.constant_step_mean}}},
              {"characteristic_time_s", tau},
              {"characteristic_energy_ev", c.thermal.characteristic_energy_ev}};
  return r;
}

inline ScenarioResult run_scenario(const RunConfig& c) {
  switch (c.scenario) {
    case ScenarioKind::FreePacket: return run_free_packet(c);
    case ScenarioKind::TwoLevelCollapse: return run_two_level(c);
    case ScenarioKind::GridScattering: return run_grid_scattering(c);
    case ScenarioKind::Eraser: return run_eraser(c);
    case ScenarioKind::WalkScan: return run_walk_scan(c);
    case ScenarioKind::ConservationSuite: return run_conservation_suite(c);
    case ScenarioKind::Thermal: return run_thermal(c);
  }
  throw std::logic_error("unhandled scenario");
}

// ---------------------------------------------------------------------------
// Shipped configurations

inline InitialConfig two_body_initial(TwoBodyPacket p) {
  InitialConfig i;
  i.kind = "two_body";
  i.packet = std::move(p);
  return i;
}

/// Two particles of mass 1 and 2 in one dimension approaching a Gaussian well.
inline RunConfig scattering_base() {
  RunConfig c;
  c.physics.c = 10.0;
  c.physics.particles = {{"a", 1.0, 0.0}, {"b", 2.0, 0.0}};
  c.physics.potential = {"gaussian_well", -1.0, 2.0, 1.0, 1.0};
  c.grid = {1, 128, 16.0};
  c.initial = two_body_initial({{0.0}, {0.3}, 2.0, {-6.0}, {1.0}, 2.0, 0.0});
  c.numerics.dt = 0.01;
  c.numerics.n_steps = 800;
  c.numerics.scheme = Scheme::CrankNicolsonStencil;
  c.numerics.stop_on_absorption = false;
  c.ensemble.master_seed = 103;
  return c;
}

inline RunConfig preset(ScenarioKind k) {
  RunConfig c;
  c.scenario = k;
  c.backend = default_backend(k);
  c.output.directory = "out/" + scenario_name(k);
  switch (k) {
    case ScenarioKind::FreePacket:
      c.physics.kappa = 0.0;
      c.grid = {1, 512, 40.0};
      c.numerics.n_steps = 1000;
      c.numerics.record_every = 10;
      c.numerics.stop_on_absorption = false;
      break;
    case ScenarioKind::TwoLevelCollapse:
      c.physics.kappa = 1.5;
      c.two_level.initial_weight = 0.3;
      c.numerics.n_steps = 100000;
      c.numerics.record_every = 10;
      c.ensemble.n_traj = 10000;
      break;
    case ScenarioKind::GridScattering: {
      const std::string dir = c.output.directory;
      c = scattering_base();
      c.scenario = k;
      c.output.directory = dir;
      c.numerics.record_every = 10;
      c.numerics.record_expectations = true;
      break;
    }
    case ScenarioKind::ConservationSuite: {
      const std::string dir = c.output.directory;
      c = scattering_base();
      c.scenario = k;
      c.output.directory = dir;
      c.grid.points_per_axis = 64;
      c.conservation.quantity = ConservedQuantity::Momentum;
      c.conservation.kappas = {1.0, 100.0};
      c.conservation.spectral_grid = {1, 512, 32.0};
      c.conservation.spectral_initial = c.initial;
      c.conservation.spectral_steps = 10;
      break;
    }
    case ScenarioKind::Eraser:
    case ScenarioKind::WalkScan:
      c.ensemble.n_traj = 100000;
      break;
    case ScenarioKind::Thermal: break;
  }
  c.numerics.gain = c.physics.kappa;
  return c;
}

/// Two-dimensional refinement study of the angular momentum.
inline RunConfig preset_angular_momentum() {
  RunConfig c = scattering_base();
  c.scenario = ScenarioKind::ConservationSuite;
  c.output.directory = "out/conservation_lz";
  c.physics.potential.width = 3.0;
  c.grid = {2, 16, 6.0};
  c.initial = two_body_initial({{0.0, 0.5}, {0.5, 0.0}, 0.7, {0.0, 0.0}, {0.0, 0.0}, 0.7, -0.3});
  c.numerics.n_steps = 20;
  c.ensemble.master_seed = 7;
  c.conservation.quantity = ConservedQuantity::AngularMomentumZ;
  c.conservation.kappas = {1.0, 100.0};
  c.conservation.residual_every = 5;
  c.conservation.spectral_grid = {2, 32, 9.6};
  c.conservation.spectral_initial =
      two_body_initial({{0.0, 0.3}, {0.2, 0.0}, 0.707, {0.0, 0.0}, {0.0, 0.0}, 1.414, -0.02});
  c.conservation.spectral_steps = 2;
  c.numerics.gain = c.physics.kappa;
  return c;
}

// ---------------------------------------------------------------------------
// Runner

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

struct RunOutcome {
  int exit_code = kExitOk;
  std::string summary;
  std::vector<std::filesystem::path> artifacts;
  ScenarioResult result;
};

/// Runs the scenario and writes `<scenario>.json` plus one
/// `<scenario>_<table>.csv` per table into the output directory. Nothing is
/// written until the scenario has finished.
inline RunOutcome run(RunConfig c) {
  c.numerics.gain = c.physics.kappa;
  validate(c);
  RunOutcome out;
  try {
    out.result = run_scenario(c);
  } catch (const NumericalAbort& e) {
    out.result.partial = true;
    out.result.status = "aborted";
    out.result.report = {{"error", e.what()}};
  }
  ScenarioResult& r = out.result;
  const ArtifactMeta meta = artifact_meta(c, r.partial);
  const std::filesystem::path dir(c.output.directory);
  const std::string stem = scenario_name(c.scenario);
  if (c.output.wants("json")) {
    Json body = r.report;
    body["config"] = to_json(c);
    const auto path = dir / (stem + ".json");
    atomic_write(path, render_report(meta, std::move(body)));
    out.artifacts.push_back(path);
  }
  if (c.output.wants("csv")) {
    for (const auto& [name, table] : r.tables) {
      const auto path = dir / (stem + "_" + name + ".csv");
      atomic_write(path, table.render(meta));
      out.artifacts.push_back(path);
    }
  }
  if (r.partial) out.exit_code = kExitNumerical;
  std::ostringstream os;
  os << stem << " n_traj=" << r.n_traj << " " << r.statistic << "=";
  if (r.statistic == "status")
    os << r.status;
  else
    os << format_number(r.value);
  if (r.partial) os << " (partial: numerical abort)";
  os << " output=" << (out.artifacts.empty() ? dir.string() : out.artifacts.front().string());
  out.summary = os.str();
  return out;
}

}  // namespace icollapse
