#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "icollapse/branches.hpp"
#include "icollapse/dynamics.hpp"
#include "icollapse/wiener.hpp"

namespace icollapse {

struct IntegratorConfig {
  double dt = 0.01;
  long n_steps = 1000;
  Scheme scheme = Scheme::SplitStepSpectral;
  double gain = 1.0;
  bool renormalize_each_step = true;
  long record_every = 1;
  double theta_abs = 1e-3;
  bool real_noise = false;
  bool stop_on_absorption = true;
  bool record_expectations = false;

  void validate() const {
    if (!(dt > 0.0)) throw std::domain_error("dt must be positive");
    if (n_steps < 0) throw std::domain_error("n_steps must be non-negative");
    if (!(gain >= 0.0)) throw std::domain_error("gain must be non-negative");
    if (record_every < 1) throw std::domain_error("record_every must be at least 1");
    if (!(theta_abs > 0.0 && theta_abs < 0.5)) throw std::domain_error("theta_abs must lie in (0, 0.5)");
  }

  /// Adds the stencil stability bound, which needs the grid.
  void validate(const Model& model) const {
    validate();
    if (const auto* g = std::get_if<GridModel>(&model); g && scheme == Scheme::CrankNicolsonStencil)
      if (dt > stencil_dt_bound(g->grid, g->particles) * (1.0 + 1e-12))
        throw std::domain_error("dt exceeds the stencil stability bound h^2 min(m) / 4");
  }

  bool operator==(const IntegratorConfig&) const = default;
};

struct StepInfo {
  Complex dxi{0.0, 0.0};
  double norm_squared_before = 1.0;
  double norm_squared_after = 1.0;  // before renormalisation
  double norm_drift = 0.0;          // | |psi'| / |psi| - 1 |
  bool stochastic_applied = false;
};

/// psi <- psi + V psi dxi - V^2 psi dt / 2 for a diagonal real V.
inline void stochastic_substep(ComplexVector& psi, const RealVector& field, Complex dxi, double dt) {
  for (Index i = 0; i < psi.size(); ++i) {
    const double v = field[i];
    psi[i] *= 1.0 + v * dxi - 0.5 * v * v * dt;
  }
}

inline bool all_zero(const std::vector<CollapseOperator>& ops) {
  return std::all_of(ops.begin(), ops.end(), [](const CollapseOperator& op) { return op.is_zero(); });
}

/// One Ito step. The collapse increment is applied first, with operators built
/// from the incoming state, followed by the Hamiltonian sub-step. When every
/// operator vanishes the increment and the renormalisation are skipped, so the
/// result is the plain Schrodinger step. One increment is drawn per call
/// either way.
inline HilbertState ito_step(const HilbertState& state, const Dynamics& dyn, const std::vector<CollapseOperator>& ops,
                             WienerProcess& wiener, bool renormalize = true, StepInfo* info = nullptr) {
  const double dt = dyn.dt();
  StepInfo local;
  local.dxi = wiener.increment(dt);
  local.norm_squared_before = norm_squared(state);

  ComplexVector psi = state.amplitudes();
  if (!all_zero(ops)) {
    stochastic_substep(psi, combined_field(ops, psi.size()), local.dxi, dt);
    local.stochastic_applied = true;
  }
  dyn.schrodinger_step(psi);
  if (!psi.allFinite()) throw NumericalAbort("non-finite amplitudes after step at t = " + std::to_string(state.time()));

  HilbertState out = state.with_amplitudes(std::move(psi));
  out.set_time(state.time() + dt);
  local.norm_squared_after = norm_squared(out);
  local.norm_drift = std::abs(std::sqrt(local.norm_squared_after / local.norm_squared_before) - 1.0);
  if (renormalize && local.stochastic_applied) {
    if (!(local.norm_squared_after > 0.0)) throw NumericalAbort("state norm vanished");
    out.amplitudes() /= std::sqrt(local.norm_squared_after / local.norm_squared_before);
  }
  if (info) *info = local;
  return out;
}

inline HilbertState ito_step(const HilbertState& state, const Dynamics& dyn, double gain, WienerProcess& wiener,
                             bool renormalize = true, StepInfo* info = nullptr) {
  return ito_step(state, dyn, dyn.collapse_operators(state, gain), wiener, renormalize, info);
}

/// Pointwise change of psi* psi over one step, split into the Hamiltonian
/// current term and the stochastic term (psi* V psi)(dxi* + dxi). The
/// remainder carries the rest of the collapse increment exactly; its leading
/// part is |psi|^2 V^2 (|dxi|^2 - dt), which vanishes in the mean.
struct DensityChange {
  RealVector hamiltonian_part;
  RealVector stochastic_part;
  RealVector ito_remainder;
  RealVector measured;  // |psi_after|^2 - |psi_before|^2, when supplied

  RealVector predicted() const { return hamiltonian_part + stochastic_part + ito_remainder; }
};

inline DensityChange density_change_decomposition(const HilbertState& before, const Dynamics& dyn,
                                                  const std::vector<CollapseOperator>& ops, Complex dxi) {
  const double dt = dyn.dt();
  const ComplexVector& psi = before.amplitudes();
  const RealVector field = all_zero(ops) ? RealVector::Zero(psi.size()) : combined_field(ops, psi.size());
  const ComplexVector hpsi = dyn.apply_hamiltonian(before).amplitudes();

  DensityChange out;
  out.hamiltonian_part = 2.0 * dt * psi.conjugate().cwiseProduct(hpsi).imag();
  const RealVector density = psi.cwiseAbs2();
  out.stochastic_part = density.cwiseProduct(field) * (2.0 * dxi.real());
  out.ito_remainder.resize(psi.size());
  for (Index i = 0; i < psi.size(); ++i) {
    const Complex a = field[i] * dxi - 0.5 * field[i] * field[i] * dt;
    out.ito_remainder[i] = density[i] * (std::norm(1.0 + a) - 1.0 - 2.0 * field[i] * dxi.real());
  }
  return out;
}

inline DensityChange density_change_decomposition(const HilbertState& before, const HilbertState& after,
                                                  const Dynamics& dyn, const std::vector<CollapseOperator>& ops,
                                                  Complex dxi) {
  require_same_basis(before, after);
  DensityChange out = density_change_decomposition(before, dyn, ops, dxi);
  out.measured = after.amplitudes().cwiseAbs2() - before.amplitudes().cwiseAbs2();
  return out;
}

enum class CollapseFlag { None, ToI, ToO };

inline const char* to_string(CollapseFlag f) {
  switch (f) {
    case CollapseFlag::ToI: return "to_I";
    case CollapseFlag::ToO: return "to_O";
    default: return "none";
  }
}

inline CollapseFlag collapse_flag(double weight_interacting, double theta_abs) {
  if (weight_interacting > 1.0 - theta_abs) return CollapseFlag::ToI;
  if (weight_interacting < theta_abs) return CollapseFlag::ToO;
  return CollapseFlag::None;
}

/// Normalised expectations of one (possibly restricted) state. Momentum has one
/// entry per spatial dimension; quantities the backend cannot supply are NaN.
struct Expectations {
  std::vector<double> momentum;
  double angular_momentum_z = std::numeric_limits<double>::quiet_NaN();
  double energy = std::numeric_limits<double>::quiet_NaN();
};

struct ExpectationSample {
  Expectations total;
  Expectations interacting;
  Expectations noninteracting;
};

inline Expectations measure_expectations(const HilbertState& s, const Dynamics& dyn) {
  Expectations e;
  const double n2 = norm_squared(s);
  if (!(n2 > 0.0)) {
    if (dyn.is_grid()) e.momentum.assign(static_cast<std::size_t>(dyn.layout().dims()), 0.0);
    return e;
  }
  e.energy = inner(s, dyn.apply_hamiltonian(s)).real() / n2;
  if (!dyn.is_grid()) return e;
  const auto scheme = dyn.derivative_scheme();
  for (int d = 0; d < dyn.layout().dims(); ++d) e.momentum.push_back(inner(s, apply_momentum(s, d, scheme)).real() / n2);
  if (dyn.layout().dims() == 2) e.angular_momentum_z = inner(s, apply_angular_momentum_z(s, scheme)).real() / n2;
  return e;
}

inline ExpectationSample measure_sample(const HilbertState& s, const Dynamics& dyn, const BranchDecomposition& b) {
  return {measure_expectations(s, dyn), measure_expectations(restrict_to(s, b.interacting), dyn),
          measure_expectations(restrict_to(s, b.noninteracting), dyn)};
}

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<long> steps;
  std::vector<double> norm_drift;
  std::vector<double> weight_interacting;
  std::vector<ExpectationSample> expectations;
  CollapseFlag flag = CollapseFlag::None;
  long steps_taken = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  bool aborted = false;
  std::string abort_reason;

  double final_weight() const { return weight_interacting.empty() ? 0.0 : weight_interacting.back(); }
  bool operator==(const TrajectoryRecord& o) const {
    return times == o.times && steps == o.steps && norm_drift == o.norm_drift &&
           weight_interacting == o.weight_interacting && flag == o.flag && steps_taken == o.steps_taken &&
           seed == o.seed && stream == o.stream && aborted == o.aborted;
  }
};

/// Everything an observer may inspect about one completed step.
struct StepContext {
  long step = 0;
  const HilbertState& before;
  const HilbertState& after;
  const std::vector<CollapseOperator>& operators;
  const StepInfo& info;
  const Dynamics& dynamics;
};

using StepObserver = std::function<void(const StepContext&)>;

inline double interacting_weight(const HilbertState& s, const Dynamics& dyn) {
  return branch_decompose(s, dyn.branch_potential()).weight_interacting;
}

/// Steps until n_steps or, when enabled, until the interacting weight leaves
/// [theta_abs, 1 - theta_abs]. Deterministic given (seed, stream).
inline TrajectoryRecord run_trajectory(const HilbertState& initial, const Dynamics& dyn, const IntegratorConfig& cfg,
                                       std::uint64_t seed, std::uint64_t stream = 0,
                                       const StepObserver& observer = {}) {
  cfg.validate();
  if (std::abs(cfg.dt - dyn.dt()) > 1e-15 * cfg.dt) throw std::invalid_argument("config dt differs from dynamics dt");
  TrajectoryRecord rec;
  rec.seed = seed;
  rec.stream = stream;
  WienerProcess wiener(seed, stream, cfg.real_noise);

  HilbertState state = initial;
  auto record = [&](long step, double drift) {
    const BranchDecomposition b = branch_decompose(state, dyn.branch_potential());
    rec.times.push_back(state.time());
    rec.steps.push_back(step);
    rec.norm_drift.push_back(drift);
    rec.weight_interacting.push_back(b.weight_interacting);
    if (cfg.record_expectations) rec.expectations.push_back(measure_sample(state, dyn, b));
    return b.weight_interacting;
  };

  double weight = record(0, 0.0);
  long step = 0;
  try {
    while (step < cfg.n_steps) {
      if (cfg.stop_on_absorption && collapse_flag(weight, cfg.theta_abs) != CollapseFlag::None) break;
      const auto ops = dyn.collapse_operators(state, cfg.gain);
      StepInfo info;
      HilbertState next = ito_step(state, dyn, ops, wiener, cfg.renormalize_each_step, &info);
      ++step;
      if (observer) observer(StepContext{step, state, next, ops, info, dyn});
      state = std::move(next);
      const bool absorbed_now =
          cfg.stop_on_absorption && collapse_flag(interacting_weight(state, dyn), cfg.theta_abs) != CollapseFlag::None;
      if (step % cfg.record_every == 0 || step == cfg.n_steps || absorbed_now) {
        weight = record(step, info.norm_drift);
      } else if (cfg.stop_on_absorption) {
        weight = interacting_weight(state, dyn);
      }
    }
  } catch (const NumericalAbort& e) {
    rec.aborted = true;
    rec.abort_reason = e.what();
  }
  rec.steps_taken = step;
  rec.flag = collapse_flag(rec.final_weight(), cfg.theta_abs);
  return rec;
}

/// Binomial proportion with its standard error and a Wilson score interval.
struct BinomialEstimate {
  long successes = 0;
  long trials = 0;
  double p = 0.0;
  double sigma = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

inline BinomialEstimate binomial_estimate(long successes, long trials, double z = 1.96) {
  BinomialEstimate b;
  b.successes = successes;
  b.trials = trials;
  if (trials <= 0) return b;
  const double n = static_cast<double>(trials);
  b.p = static_cast<double>(successes) / n;
  b.sigma = std::sqrt(b.p * (1.0 - b.p) / n);
  const double z2 = z * z;
  const double centre = (b.p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(b.p * (1.0 - b.p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  b.ci_low = std::max(0.0, centre - half);
  b.ci_high = std::min(1.0, centre + half);
  return b;
}

struct EnsembleOptions {
  unsigned threads = 0;  // 0: hardware concurrency
  bool keep_records = false;
};

struct EnsembleResult {
  long n_traj = 0;
  std::uint64_t master_seed = 0;
  BinomialEstimate to_interacting;
  BinomialEstimate to_noninteracting;
  long unabsorbed = 0;
  long aborted = 0;
  double mean_steps = 0.0;
  double steps_stderr = 0.0;
  double initial_weight = 0.0;
  // Interacting weight at each recorded time; finished trajectories hold
  // their final value.
  std::vector<double> times;
  std::vector<double> weight_mean;
  std::vector<double> weight_stderr;
  double max_martingale_z = 0.0;
  double max_norm_drift = 0.0;
  double mean_norm_drift = 0.0;
  double max_momentum_drift = 0.0;  // only with recorded expectations
  std::vector<TrajectoryRecord> records;
};

namespace detail {

/// Runs job(i) for i in [0, n) across worker threads; results land by index so
/// the reduction order does not depend on scheduling.
template <class Job>
void parallel_for(long n, unsigned threads, Job&& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<long>(threads, std::max<long>(n, 1)));
  std::atomic<long> next{0};
  std::vector<std::exception_ptr> errors(threads);
  auto worker = [&](unsigned w) {
    try {
      for (long i = next++; i < n; i = next++) job(i);
    } catch (...) {
      errors[w] = std::current_exception();
      next = n;
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Independent trajectories with streams (master_seed, index).
inline EnsembleResult run_ensemble(const HilbertState& initial, const Dynamics& dyn, const IntegratorConfig& cfg,
                                   long n_traj, std::uint64_t master_seed, const EnsembleOptions& opts = {}) {
  if (n_traj < 1) throw std::domain_error("ensemble needs at least one trajectory");
  cfg.validate();
  std::vector<TrajectoryRecord> recs(static_cast<std::size_t>(n_traj));
  detail::parallel_for(n_traj, opts.threads, [&](long i) {
    recs[static_cast<std::size_t>(i)] = run_trajectory(initial, dyn, cfg, master_seed, static_cast<std::uint64_t>(i));
  });

  EnsembleResult r;
  r.n_traj = n_traj;
  r.master_seed = master_seed;
  r.initial_weight = interacting_weight(initial, dyn);
  long to_i = 0, to_o = 0;
  double steps = 0.0, steps2 = 0.0, drift_sum = 0.0;
  long drift_count = 0;
  for (const auto& t : recs) {
    to_i += t.flag == CollapseFlag::ToI;
    to_o += t.flag == CollapseFlag::ToO;
    r.unabsorbed += t.flag == CollapseFlag::None;
    r.aborted += t.aborted;
    steps += static_cast<double>(t.steps_taken);
    steps2 += static_cast<double>(t.steps_taken) * static_cast<double>(t.steps_taken);
    for (double d : t.norm_drift) {
      r.max_norm_drift = std::max(r.max_norm_drift, d);
      drift_sum += d;
      ++drift_count;
    }
    if (t.expectations.size() > 1) {
      const auto& p0 = t.expectations.front().total.momentum;
      const auto& p1 = t.expectations.back().total.momentum;
      for (std::size_t d = 0; d < p0.size(); ++d) r.max_momentum_drift = std::max(r.max_momentum_drift, std::abs(p1[d] - p0[d]));
    }
  }
  const double n = static_cast<double>(n_traj);
  r.to_interacting = binomial_estimate(to_i, n_traj);
  r.to_noninteracting = binomial_estimate(to_o, n_traj);
  r.mean_steps = steps / n;
  r.steps_stderr = n > 1 ? std::sqrt(std::max(0.0, (steps2 - steps * steps / n) / (n - 1.0)) / n) : 0.0;
  r.mean_norm_drift = drift_count ? drift_sum / static_cast<double>(drift_count) : 0.0;

  // Martingale series on the record grid 0, k, 2k, ..., n_steps.
  const long k = cfg.record_every;
  const long slots = cfg.n_steps / k + 1;
  r.times.resize(static_cast<std::size_t>(slots));
  r.weight_mean.assign(static_cast<std::size_t>(slots), 0.0);
  r.weight_stderr.assign(static_cast<std::size_t>(slots), 0.0);
  std::vector<double> sum(static_cast<std::size_t>(slots), 0.0), sum2(static_cast<std::size_t>(slots), 0.0);
  for (const auto& t : recs) {
    std::size_t j = 0;
    double w = t.weight_interacting.front();
    for (long s = 0; s < slots; ++s) {
      while (j < t.steps.size() && t.steps[j] <= s * k) w = t.weight_interacting[j++];
      sum[static_cast<std::size_t>(s)] += w;
      sum2[static_cast<std::size_t>(s)] += w * w;
    }
  }
  for (long s = 0; s < slots; ++s) {
    const auto u = static_cast<std::size_t>(s);
    r.times[u] = initial.time() + static_cast<double>(s * k) * cfg.dt;
    r.weight_mean[u] = sum[u] / n;
    const double var = n > 1 ? std::max(0.0, (sum2[u] - sum[u] * sum[u] / n) / (n - 1.0)) : 0.0;
    r.weight_stderr[u] = std::sqrt(var / n);
    const double dev = std::abs(r.weight_mean[u] - r.initial_weight);
    if (r.weight_stderr[u] > 0.0) {
      r.max_martingale_z = std::max(r.max_martingale_z, dev / r.weight_stderr[u]);
    } else if (dev > 1e-12) {
      r.max_martingale_z = std::numeric_limits<double>::infinity();
    }
  }
  if (opts.keep_records) r.records = std::move(recs);
  return r;
}

}  // namespace icollapse
