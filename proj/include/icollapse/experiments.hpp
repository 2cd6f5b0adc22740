#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "icollapse/integrator.hpp"
#include "icollapse/walk.hpp"

namespace icollapse {

// ---------------------------------------------------------------------------
// Quantum eraser on target (T) and detector (D), each with branches I and O.

/// How the collapse kick of one interaction is drawn.
enum class KickMode {
  Coherent,    // +epsilon every run
  RandomSign,  // +-epsilon with equal probability
  Gaussian,    // epsilon * Z, Z standard normal
  FullSde,     // resolved Ito run on the four-state model
};

inline const char* to_string(KickMode m) {
  switch (m) {
    case KickMode::Coherent: return "coherent";
    case KickMode::RandomSign: return "random_sign";
    case KickMode::Gaussian: return "gaussian";
    default: return "full_sde";
  }
}

/// Basis order |T_I D_I>, |T_I D_O>, |T_O D_I>, |T_O D_O>; outcomes in the
/// same order with I, O replaced by S, A.
inline const std::vector<std::string>& eraser_labels() {
  static const std::vector<std::string> labels{"TI_DI", "TI_DO", "TO_DI", "TO_DO"};
  return labels;
}

struct EraserConfig {
  double epsilon = 0.05;
  long n_traj = 100000;
  double amplitude_interacting = 1.0 / std::sqrt(2.0);
  double amplitude_noninteracting = 1.0 / std::sqrt(2.0);
  KickMode mode = KickMode::RandomSign;
  std::uint64_t seed = 1;
  // Full-SDE mode: the interaction lasts sde_steps * sde_dt with unit rate.
  double sde_dt = 0.01;
  long sde_steps = 100;

  void validate() const {
    if (!(epsilon >= 0.0 && epsilon < 0.5)) throw std::domain_error("epsilon must lie in [0, 0.5)");
    if (n_traj < 1) throw std::domain_error("n_traj must be at least 1");
    const double n = amplitude_interacting * amplitude_interacting + amplitude_noninteracting * amplitude_noninteracting;
    if (std::abs(n - 1.0) > 1e-12) throw std::domain_error("eraser amplitudes must be normalised");
    if (!(sde_dt > 0.0) || sde_steps < 1) throw std::domain_error("eraser SDE step settings must be positive");
  }
};

/// I/O to S/A change of basis on both particles, (H x H) with the 2x2 Hadamard.
inline Eigen::Matrix4cd symmetric_basis_change() {
  Eigen::Matrix2cd h;
  h << 1.0, 1.0, 1.0, -1.0;
  h /= std::sqrt(2.0);
  Eigen::Matrix4cd u;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) u(2 * a + b, 2 * c + d) = h(a, c) * h(b, d);
  return u;
}

/// Entangled post-interaction state a_I |T_I D_I> + a_O |T_O D_O>.
inline Eigen::Vector4cd eraser_initial(const EraserConfig& cfg) {
  Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
  psi[0] = cfg.amplitude_interacting;
  psi[3] = cfg.amplitude_noninteracting;
  return psi;
}

/// Adds the kick V psi * k with V = +1 on |T_I D_I> and -1 on |T_O D_O>:
/// unnormalised, the S-A cross amplitudes become k / sqrt(2) each.
inline Eigen::Vector4cd apply_eraser_kick(const Eigen::Vector4cd& psi, Complex kick) {
  Eigen::Vector4cd out = psi;
  out[0] += kick * psi[0];
  out[3] -= kick * psi[3];
  return out;
}

/// Probabilities of the S/A outcomes |T_S D_S>, |T_S D_A>, |T_A D_S>, |T_A D_A>.
inline std::array<double, 4> symmetric_outcome_probabilities(const Eigen::Vector4cd& psi_io) {
  const Eigen::Vector4cd sa = symmetric_basis_change() * psi_io;
  const double total = sa.squaredNorm();
  return {std::norm(sa[0]) / total, std::norm(sa[1]) / total, std::norm(sa[2]) / total, std::norm(sa[3]) / total};
}

/// Four-state finite model whose single channel produces the kick above with
/// operator strength `gain` times the unit potential gap.
inline FiniteModel eraser_model() {
  FiniteModel m;
  m.labels = eraser_labels();
  m.hamiltonian = Eigen::MatrixXcd::Zero(4, 4);
  FiniteChannel ch;
  ch.potential = RealVector::Zero(4);
  ch.potential[0] = 1.0;
  ch.mass_j = 0.5;
  ch.mass_k = 0.5;
  ch.gamma = 1.0;
  m.channels.push_back(ch);
  return m;
}

struct EraserResult {
  double epsilon = 0.0;
  KickMode mode = KickMode::RandomSign;
  long n_traj = 0;
  // Mean S/A outcome probabilities, rows T in {S, A}, columns D in {S, A}.
  Eigen::Matrix2d correlation = Eigen::Matrix2d::Zero();
  // Mean over runs of P(T_S D_A) + P(T_A D_S), with its standard error.
  double cross_probability = 0.0;
  double cross_stderr = 0.0;
  // One sampled measurement per run.
  std::array<long, 4> counts{0, 0, 0, 0};
  BinomialEstimate sampled_cross;
  // |(H x H) psi - psi|_SA| for the unkicked state; zero for exact rewriting.
  double basis_change_residual = 0.0;
};

inline EraserResult eraser_run(const EraserConfig& cfg) {
  cfg.validate();
  EraserResult r;
  r.epsilon = cfg.epsilon;
  r.mode = cfg.mode;
  r.n_traj = cfg.n_traj;
  const Eigen::Vector4cd psi0 = eraser_initial(cfg);
  {
    // Linear evolution: a_I |II> + a_O |OO> rewritten in S/A.
    const double p = cfg.amplitude_interacting, q = cfg.amplitude_noninteracting;
    Eigen::Vector4cd expected;
    expected << (p + q) / 2.0, (p - q) / 2.0, (p - q) / 2.0, (p + q) / 2.0;
    r.basis_change_residual = (symmetric_basis_change() * psi0 - expected).norm();
  }

  std::mt19937_64 engine = make_engine(cfg.seed, 0);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;

  std::optional<Dynamics> dyn;
  IntegratorConfig integ;
  if (cfg.mode == KickMode::FullSde) {
    dyn.emplace(eraser_model(), Scheme::SplitStepSpectral, cfg.sde_dt);
    integ.dt = cfg.sde_dt;
    integ.gain = 2.0 * cfg.epsilon;  // centred potential is +-1/2 on the two populated states
    integ.renormalize_each_step = false;
  }

  // Welford running mean and sum of squared deviations
  double mean_cross = 0.0, m2 = 0.0;
  std::array<double, 4> mean{0.0, 0.0, 0.0, 0.0};
  for (long t = 0; t < cfg.n_traj; ++t) {
    Eigen::Vector4cd psi;
    switch (cfg.mode) {
      case KickMode::Coherent: psi = apply_eraser_kick(psi0, cfg.epsilon); break;
      case KickMode::RandomSign:
        psi = apply_eraser_kick(psi0, (engine() & 1u) ? cfg.epsilon : -cfg.epsilon);
        break;
      case KickMode::Gaussian: psi = apply_eraser_kick(psi0, cfg.epsilon * normal(engine)); break;
      case KickMode::FullSde: {
        HilbertState s = dyn->make_state(psi0);
        WienerProcess w(cfg.seed, static_cast<std::uint64_t>(t) + 1);
        for (long k = 0; k < cfg.sde_steps; ++k) s = ito_step(s, *dyn, integ.gain, w, false);
        psi = s.amplitudes();
        break;
      }
    }
    const auto p = symmetric_outcome_probabilities(psi);
    for (int i = 0; i < 4; ++i) mean[static_cast<std::size_t>(i)] += p[static_cast<std::size_t>(i)];
    const double cross = p[1] + p[2];
    const double delta = cross - mean_cross;
    mean_cross += delta / static_cast<double>(t + 1);
    m2 += delta * (cross - mean_cross);
    // One measurement in the S/A basis.
    double u = uniform(engine);
    int outcome = 3;
    for (int i = 0; i < 3; ++i) {
      if (u < p[static_cast<std::size_t>(i)]) {
        outcome = i;
        break;
      }
      u -= p[static_cast<std::size_t>(i)];
    }
    ++r.counts[static_cast<std::size_t>(outcome)];
  }
  const double n = static_cast<double>(cfg.n_traj);
  for (int i = 0; i < 4; ++i) r.correlation(i / 2, i % 2) = mean[static_cast<std::size_t>(i)] / n;
  r.cross_probability = mean_cross;
  const double var = n > 1 ? m2 / (n - 1.0) : 0.0;
  r.cross_stderr = std::sqrt(var / n);
  r.sampled_cross = binomial_estimate(r.counts[1] + r.counts[2], cfg.n_traj);
  return r;
}

struct EraserSweep {
  std::vector<EraserResult> points;
  LineFit log_fit;  // log(cross probability) against log(epsilon)
};

inline EraserSweep eraser_sweep(const EraserConfig& base, const std::vector<double>& epsilons) {
  EraserSweep s;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    EraserConfig cfg = base;
    cfg.epsilon = epsilons[i];
    cfg.seed = base.seed + i;
    s.points.push_back(eraser_run(cfg));
    if (epsilons[i] > 0.0 && s.points.back().cross_probability > 0.0) {
      lx.push_back(std::log(epsilons[i]));
      ly.push_back(std::log(s.points.back().cross_probability));
    }
  }
  if (lx.size() >= 2) s.log_fit = fit_line(lx, ly);
  return s;
}

/// Nonrelativistic interactions have ratio at most this; the cross-term
/// probability is then below kEraserProbabilityBound.
inline constexpr double kEraserRatioLimit = 1e-3;
inline constexpr double kEraserProbabilityBound = 1e-6;

struct EraserBound {
  double ratio = 0.0;
  double probability = 0.0;
  bool nonrelativistic = false;
  bool within_bound = false;
};

inline EraserBound eraser_bound_check(double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw std::domain_error("interaction ratio must lie in [0, 1)");
  EraserBound b;
  b.ratio = ratio;
  b.probability = ratio * ratio;
  b.nonrelativistic = ratio <= kEraserRatioLimit;
  b.within_bound = b.probability <= kEraserProbabilityBound;
  return b;
}

// ---------------------------------------------------------------------------
// Thermal estimate, SI units.

struct ThermalInput {
  double temperature = 273.15;     // K
  double mass = 5e-26;             // kg
  double speed = 460.0;            // m/s
  double separation = 4.6e-8;      // m
  double particle_count = 2.5e25;  // dimensionless
  double collision_rate = 0.0;     // 1/s; zero means speed / separation
  double interaction_energy = 0.0;  // J; zero means k T
  double thermal_energy = 0.0;      // J; zero means N k T

  void validate() const {
    if (!(temperature >= 0.0)) throw std::domain_error("temperature must be non-negative");
    if (!(mass > 0.0) || !(speed > 0.0) || !(separation > 0.0) || !(particle_count > 0.0))
      throw std::domain_error("thermal inputs must be strictly positive");
    if (collision_rate < 0.0 || interaction_energy < 0.0 || thermal_energy < 0.0)
      throw std::domain_error("thermal overrides must be non-negative");
  }
};

struct ThermalEstimate {
  double interaction_energy = 0.0;  // J
  double rest_energy = 0.0;         // J
  double ratio = 0.0;
  double collision_rate = 0.0;      // 1/s
  double fractional_rate = 0.0;     // 1/s
  double thermal_energy = 0.0;      // J
  double joules_per_year = 0.0;
};

/// Fractional rate (E / m c^2)^2 X and the implied energy gain per year.
inline ThermalEstimate thermal_estimate(const ThermalInput& in) {
  in.validate();
  ThermalEstimate e;
  const double kt = si::boltzmann * in.temperature;
  e.interaction_energy = in.interaction_energy > 0.0 ? in.interaction_energy : kt;
  e.rest_energy = in.mass * si::speed_of_light * si::speed_of_light;
  e.ratio = e.interaction_energy / e.rest_energy;
  e.collision_rate = in.collision_rate > 0.0 ? in.collision_rate : in.speed / in.separation;
  e.fractional_rate = e.ratio * e.ratio * e.collision_rate;
  e.thermal_energy = in.thermal_energy > 0.0 ? in.thermal_energy : in.particle_count * kt;
  e.joules_per_year = e.fractional_rate * si::seconds_per_year * e.thermal_energy;
  return e;
}

}  // namespace icollapse
