// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "icollapse/icollapse.hpp"
#include "icollapse/scenarios.hpp"

using namespace icollapse;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1. absorption probability is linear in the starting weight
Outcome born_rule() {
  const ScanTable t = born_linearity_scan(0.05, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}, 100000, 20240101);
  const bool pass = std::abs(t.fit.slope - 1.0) <= 0.02 && std::abs(t.fit.intercept) <= 0.01;
  return {pass, "slope=" + format_number(t.fit.slope) + " intercept=" + format_number(t.fit.intercept)};
}

// 2. martingale of the interacting weight; equal and opposite density changes
Outcome martingale() {
  const RunConfig c = preset(ScenarioKind::TwoLevelCollapse);
  const Dynamics dyn(two_level_model(c.two_level, c.physics.c), c.numerics.scheme, c.numerics.dt);
  const HilbertState psi0 = two_level_state(dyn, c.two_level.initial_weight);
  const EnsembleResult e = run_ensemble(psi0, dyn, c.numerics, 10000, c.ensemble.master_seed);

  double worst = 0.0;
  long steps = 0;
  for (std::uint64_t traj = 0; traj < 200; ++traj) {
    run_trajectory(psi0, dyn, c.numerics, c.ensemble.master_seed, traj, [&](const StepContext& ctx) {
      const DensityChange d = density_change_decomposition(ctx.before, ctx.dynamics, ctx.operators, ctx.info.dxi);
      const BranchDecomposition b = branch_decompose(ctx.before, ctx.dynamics.branch_potential());
      double in_i = 0.0, in_o = 0.0;
      for (Index i = 0; i < d.stochastic_part.size(); ++i)
        (b.interacting[static_cast<std::size_t>(i)] ? in_i : in_o) += d.stochastic_part[i];
      worst = std::max(worst, std::abs(in_i + in_o) * ctx.before.weight());
      ++steps;
    });
  }
  const bool pass = e.max_martingale_z <= 4.0 && worst <= 1e-10 && e.aborted == 0;
  return {pass, "max_z=" + fmt("%.3f", e.max_martingale_z) + " max|dI+dO|=" + fmt("%.2e", worst) +
                    " over " + std::to_string(steps) + " steps"};
}

// 3. SDE absorption frequencies agree with the walk and with the start weight
Outcome sde_walk() {
  const RunConfig c = preset(ScenarioKind::TwoLevelCollapse);
  const Dynamics dyn(two_level_model(c.two_level, c.physics.c), c.numerics.scheme, c.numerics.dt);
  const double push = two_level_push(c.two_level, c);
  ScanOptions opts;
  opts.theta = c.numerics.theta_abs;
  const std::vector<double> starts{0.3, 0.5, 0.7};
  const long n = 10000;
  const ScanTable walk = born_linearity_scan(push, starts, n, c.ensemble.master_seed + 1, opts);
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const EnsembleResult e = run_ensemble(two_level_state(dyn, starts[i]), dyn, c.numerics, n,
                                          c.ensemble.master_seed + 10 + i);
    const BinomialEstimate& s = e.to_interacting;
    const BinomialEstimate& w = walk.rows[i].hits;
    const double joint = std::sqrt(s.sigma * s.sigma + w.sigma * w.sigma);
    const double exact_sigma = std::sqrt(starts[i] * (1.0 - starts[i]) / static_cast<double>(n));
    const bool ok = std::abs(s.p - w.p) <= 3.0 * joint && std::abs(s.p - starts[i]) <= 3.0 * exact_sigma &&
                    e.unabsorbed == 0 && walk.rows[i].unabsorbed == 0;
    pass = pass && ok;
    detail += (i ? " " : "") + format_number(starts[i]) + ":sde=" + fmt("%.4f", s.p) + ",walk=" + fmt("%.4f", w.p);
  }
  return {pass, detail + " push=" + fmt("%.4f", push)};
}

// 4. zero gain is the Schrodinger equation
Outcome schrodinger_reduction() {
  const RunConfig c = preset(ScenarioKind::FreePacket);
  const ScenarioResult r = run_scenario(c);
  const double err = r.value;
  const long steps = r.report["n_steps"].get<long>();

  const GridModel m = grid_model(c, c.grid);
  bool identical = true;
  for (Scheme scheme : {Scheme::SplitStepSpectral, Scheme::CrankNicolsonStencil}) {
    GridModel coarse = m;
    coarse.grid.points_per_axis = 64;
    const double dt = scheme == Scheme::CrankNicolsonStencil ? 0.5 * stencil_dt_bound(coarse.grid, coarse.particles)
                                                             : c.numerics.dt;
    const Dynamics dyn(coarse, scheme, dt);
    const HilbertState psi0 = initial_grid_state(c.initial, coarse);
    IntegratorConfig ic = c.numerics;
    ic.scheme = scheme;
    ic.dt = dt;
    ic.gain = 0.0;
    ComplexVector last;
    run_trajectory(psi0, dyn, ic, 5, 0, [&](const StepContext& ctx) {
      if (ctx.step == ic.n_steps) last = ctx.after.amplitudes();
    });
    HilbertState ref = psi0;
    for (long k = 0; k < ic.n_steps; ++k) ref = dyn.schrodinger_step(ref);
    identical = identical && last.size() == ref.size() && last == ref.amplitudes();
  }
  const bool pass = err < 1e-6 && steps >= 1000 && identical;
  return {pass, "max_width_error=" + fmt("%.3e", err) + " steps=" + std::to_string(steps) +
                    " bit_identical=" + (identical ? "yes" : "no")};
}

Outcome conservation(const RunConfig& c) {
  const ConservationSuite s = conservation_suite(c);
  std::string detail;
  for (const auto& r : s.refinement)
    detail += "k=" + format_number(r.kappa) + ":residual_ratio=" + fmt("%.2f", r.residual_ratio) +
              ",drift_ratio=" + fmt("%.2f", r.drift_ratio) + " ";
  for (const auto& r : s.spectral)
    detail += "k=" + format_number(r.kappa) + ":spectral=" + fmt("%.1e", r.report.max_residual()) + " ";
  detail.pop_back();
  return {s.pass(), detail};
}

// 5. momentum, one dimension
Outcome momentum() { return conservation(preset(ScenarioKind::ConservationSuite)); }

// 6. angular momentum, two dimensions
Outcome angular_momentum() { return conservation(preset_angular_momentum()); }

// 7. energy deviation structure on the shipped scattering run
Outcome energy_structure() {
  const ScenarioResult r = run_scenario(preset(ScenarioKind::GridScattering));
  const double min_term = r.report["min_positive_term"].get<double>();
  const double factor = r.report["deviation_over_benchmark"].get<double>();
  const bool pass = min_term >= 0.0 && factor >= 0.1 && factor <= 10.0;
  return {pass, "min_positive_term=" + fmt("%.3e", min_term) + " deviation/benchmark=" + fmt("%.3f", factor)};
}

// 8. eraser cross probability is quadratic in epsilon
Outcome eraser() {
  const RunConfig c = preset(ScenarioKind::Eraser);
  const ScenarioResult r = run_scenario(c);
  const double slope = r.report["log_log_slope"].get<double>();
  const double p = eraser_bound_check(1e-3).probability;
  const bool pass = std::abs(slope - 2.0) <= 0.1 && p == 1e-6 && c.ensemble.n_traj >= 100000 &&
                    c.eraser.epsilons == std::vector<double>{0.02, 0.05, 0.1};
  return {pass, "slope=" + fmt("%.4f", slope) + " bound(1e-3)=" + format_number(p)};
}

// 9. thermal chain, step counts and the characteristic time
Outcome arithmetic() {
  const ThermalEstimate e = thermal_estimate(preset(ScenarioKind::Thermal).thermal.input);
  auto within2 = [](double v, double ref) { return v >= ref / 2.0 && v <= ref * 2.0; };
  const double tau = characteristic_time_ev(100.0);
  const bool pass = within2(e.ratio, 1e-12) && within2(e.fractional_rate, 1e-14) && within2(e.joules_per_year, 0.03) &&
                    step_count_estimate(1e-3, 1.0).estimate == 1e6 &&
                    step_count_estimate(1e-3, 1e-3).estimate == 1e12 &&
                    step_count_estimate(1e-7, 1e-3).estimate == 1e20 && tau >= 1e-18 && tau <= 1e-17;
  return {pass, "ratio=" + fmt("%.3e", e.ratio) + " rate=" + fmt("%.3e", e.fractional_rate) + "/s J/yr=" +
                    fmt("%.4f", e.joules_per_year) + " tau(100eV)=" + fmt("%.3e", tau)};
}

// 10. Wiener moments and reproducible artifacts
Outcome noise_and_determinism() {
  const double dt = 0.01;
  const long n = 100000;
  WienerProcess w(2718, 0);
  Complex s1 = 0.0, s2 = 0.0;
  double sabs = 0.0;
  for (long i = 0; i < n; ++i) {
    const Complex d = w.increment(dt);
    s1 += d;
    s2 += d * d;
    sabs += std::norm(d);
  }
  const double nn = static_cast<double>(n);
  // Re and Im of dxi have variance dt / 2; |dxi|^2 and dxi^2 parts have variance dt^2
  const double z_mean = std::max(std::abs(s1.real()), std::abs(s1.imag())) / nn / std::sqrt(dt / 2.0 / nn);
  const double z_abs = std::abs(sabs / nn - dt) / (dt / std::sqrt(nn));
  const double z_sq = std::max(std::abs(s2.real()), std::abs(s2.imag())) / nn / (dt / std::sqrt(nn));

  RunConfig c = preset(ScenarioKind::TwoLevelCollapse);
  c.ensemble.n_traj = 200;
  const auto dir = std::filesystem::temp_directory_path() / "icollapse_acceptance_repro";
  std::filesystem::remove_all(dir);
  c.output.directory = dir.string();
  std::vector<std::string> first, second;
  for (const auto& p : run(c).artifacts) first.push_back(slurp(p));
  for (const auto& p : run(c).artifacts) second.push_back(slurp(p));
  std::filesystem::remove_all(dir);
  const bool identical = !first.empty() && first == second;

  const bool pass = z_mean <= 4.0 && z_abs <= 4.0 && z_sq <= 4.0 && identical;
  return {pass, "z(mean)=" + fmt("%.2f", z_mean) + " z(|dxi|^2)=" + fmt("%.2f", z_abs) + " z(dxi^2)=" +
                    fmt("%.2f", z_sq) + " artifacts_identical=" + (identical ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"born_rule_linearity", born_rule},
      {"martingale_and_branch_balance", martingale},
      {"sde_walk_consistency", sde_walk},
      {"schrodinger_reduction", schrodinger_reduction},
      {"momentum_conservation", momentum},
      {"angular_momentum_conservation", angular_momentum},
      {"energy_deviation_structure", energy_structure},
      {"eraser_quadratic_law", eraser},
      {"arithmetic_estimates", arithmetic},
      {"noise_and_determinism", noise_and_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s %2zu %-30s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
