#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "icollapse/integrator.hpp"

namespace icollapse {

/// Both sides of d(psi* Q psi) = (psi* V Q psi)(dxi* + dxi) for one collapse
/// increment, with the Ito rule dxi* dxi = dt applied to the left side:
///   lhs = psi* [ Q(V psi) dxi + V(Q psi) dxi* + (V Q V psi - Q(V^2 psi)/2 - V^2 (Q psi)/2) dt ]
/// Norms are grid L2 norms of the pointwise fields; `relative` divides by
/// 2 |dxi| |psi* V Q psi|.
struct ProportionalityResidual {
  double absolute = 0.0;
  double relative = 0.0;
  double lhs_norm = 0.0;
  double rhs_norm = 0.0;
};

inline ProportionalityResidual pointwise_proportionality_check(const HilbertState& state, const RealVector& field,
                                                               Complex dxi, double dt, const LinearOperator& q) {
  if (field.size() != state.size()) throw StructuralError("collapse field length mismatch");
  const ComplexVector& psi = state.amplitudes();
  const ComplexVector v = field.cast<Complex>();
  auto Q = [&](const ComplexVector& x) { return q.apply(state.with_amplitudes(x)).amplitudes(); };

  const ComplexVector vpsi = v.cwiseProduct(psi);
  const ComplexVector f1 = Q(vpsi);                         // Q V psi
  const ComplexVector qpsi = Q(psi);
  const ComplexVector f2 = v.cwiseProduct(qpsi);            // V Q psi
  const ComplexVector f3 = Q(v.cwiseProduct(vpsi));         // Q V^2 psi
  const ComplexVector f4 = v.cwiseProduct(f2);              // V^2 Q psi
  const ComplexVector f5 = v.cwiseProduct(f1);              // V Q V psi

  const ComplexVector conj = psi.conjugate();
  const ComplexVector lhs =
      conj.cwiseProduct(f1 * dxi + f2 * std::conj(dxi) + (f5 - 0.5 * f3 - 0.5 * f4) * dt);
  const ComplexVector rhs = conj.cwiseProduct(f2) * (std::conj(dxi) + dxi);
  const double w = std::sqrt(state.weight());
  ProportionalityResidual r;
  r.absolute = (lhs - rhs).norm() * w;
  r.lhs_norm = lhs.norm() * w;
  r.rhs_norm = rhs.norm() * w;
  // Size of a single stochastic term, so the ratio is independent of the
  // operator strength and of the sign of Re(dxi).
  const double scale = conj.cwiseProduct(f2).norm() * w * 2.0 * std::abs(dxi);
  r.relative = scale > 0.0 ? r.absolute / scale : 0.0;
  return r;
}

inline ProportionalityResidual pointwise_proportionality_check(const HilbertState& state,
                                                               const std::vector<CollapseOperator>& ops, Complex dxi,
                                                               double dt, const LinearOperator& q) {
  return pointwise_proportionality_check(state, combined_field(ops, state.size()), dxi, dt, q);
}

/// Kinetic-energy terms of the collapse increment that do not follow the
/// density. Per unit increment, the middle coefficient is
///   -sum_p (1/2m_p) int psi* [ (lap_p V) psi + 2 grad_p V . grad_p psi ],
/// multiplied by dxi for the returned gradient and Laplacian terms. The last
/// term is sum_p (1/2m_p) int |psi|^2 |grad_p V|^2 dt.
struct EnergyDeviationTerms {
  Complex gradient_term{0.0, 0.0};
  Complex laplacian_term{0.0, 0.0};
  double positive_definite_term = 0.0;
  Complex middle_coefficient{0.0, 0.0};
};

inline EnergyDeviationTerms energy_deviation_terms(const HilbertState& state, const Dynamics& dyn,
                                                   const std::vector<CollapseOperator>& ops, Complex dxi) {
  if (!dyn.is_grid() || !state.is_grid()) throw UnsupportedError("energy deviation terms need a grid backend");
  const GridLayout& layout = state.layout();
  const int dims = layout.dims(), particles = layout.particles();
  std::vector<RealVector> grad(static_cast<std::size_t>(layout.axes()), RealVector::Zero(state.size()));
  std::vector<RealVector> lap(static_cast<std::size_t>(particles), RealVector::Zero(state.size()));
  const auto& channels = dyn.channels();
  if (ops.size() != channels.size()) throw StructuralError("one collapse operator per channel expected");
  for (std::size_t c = 0; c < ops.size(); ++c) {
    const auto* ch = std::get_if<GridChannel>(&channels[c]);
    if (!ch) throw UnsupportedError("energy deviation terms need grid channels");
    const double s = ops[c].strength();
    if (s == 0.0) continue;
    const int j = ch->potential.j, k = ch->potential.k;
    for (int d = 0; d < dims; ++d) {
      grad[static_cast<std::size_t>(layout.axis_of(j, d))] += s * ch->fields.gradient_j[d];
      grad[static_cast<std::size_t>(layout.axis_of(k, d))] -= s * ch->fields.gradient_j[d];
    }
    lap[static_cast<std::size_t>(j)] += s * ch->fields.laplacian;
    lap[static_cast<std::size_t>(k)] += s * ch->fields.laplacian;
  }

  const ComplexVector& psi = state.amplitudes();
  const RealVector density = psi.cwiseAbs2();
  const auto& masses = dyn.masses();
  Complex grad_sum = 0.0, lap_sum = 0.0;
  double positive = 0.0;
  for (int p = 0; p < particles; ++p) {
    const double inv2m = 1.0 / (2.0 * masses[static_cast<std::size_t>(p)]);
    lap_sum += inv2m * density.dot(lap[static_cast<std::size_t>(p)]);
    for (int d = 0; d < dims; ++d) {
      const auto a = static_cast<std::size_t>(layout.axis_of(p, d));
      if (grad[a].cwiseAbs().maxCoeff() == 0.0) continue;
      const ComplexVector dpsi = derivative(layout, psi, layout.axis_of(p, d), dyn.derivative_scheme());
      grad_sum += inv2m * 2.0 * psi.dot(grad[a].cast<Complex>().cwiseProduct(dpsi));
      positive += inv2m * density.dot(grad[a].cwiseAbs2());
    }
  }
  const double w = state.weight();
  EnergyDeviationTerms t;
  t.middle_coefficient = -(grad_sum + lap_sum) * w;
  t.gradient_term = -grad_sum * w * dxi;
  t.laplacian_term = -lap_sum * w * dxi;
  t.positive_definite_term = positive * w * dyn.dt();
  return t;
}

/// Reference sizes of the relativistic bookkeeping a nonrelativistic account
/// misses, for kinetic energy KE on mass m: with x = KE / (m c^2), the
/// first and second series corrections 3x/2 and 5x^2/2, radiation (v/c) x and
/// antiparticle content x^2.
struct DeviationBenchmark {
  double ratio = 0.0;
  double first_order = 0.0;
  double second_order = 0.0;
  double radiative = 0.0;
  double antiparticle = 0.0;
};

inline DeviationBenchmark deviation_ratio_benchmark(double delta_ke, double mass, double c) {
  if (delta_ke < 0.0) throw std::domain_error("kinetic energy change must be non-negative");
  if (!(mass > 0.0) || !(c > 0.0)) throw std::domain_error("mass and c must be positive");
  DeviationBenchmark b;
  b.ratio = delta_ke / (mass * c * c);
  b.first_order = 1.5 * b.ratio;
  b.second_order = 2.5 * b.ratio * b.ratio;
  b.radiative = std::sqrt(2.0 * delta_ke / mass) / c * b.ratio;
  b.antiparticle = b.ratio * b.ratio;
  return b;
}

enum class ConservedQuantity { Momentum, AngularMomentumZ, Energy };

inline const char* to_string(ConservedQuantity q) {
  switch (q) {
    case ConservedQuantity::Momentum: return "momentum";
    case ConservedQuantity::AngularMomentumZ: return "angular_momentum_z";
    default: return "energy";
  }
}

inline double quantity_of(const Expectations& e, ConservedQuantity q) {
  switch (q) {
    case ConservedQuantity::Momentum: return e.momentum.empty() ? std::numeric_limits<double>::quiet_NaN() : e.momentum[0];
    case ConservedQuantity::AngularMomentumZ: return e.angular_momentum_z;
    default: return e.energy;
  }
}

inline LinearOperator quantity_operator(ConservedQuantity q, const Dynamics& dyn, DerivativeScheme scheme) {
  switch (q) {
    case ConservedQuantity::Momentum: return Momentum{0, scheme};
    case ConservedQuantity::AngularMomentumZ: return AngularMomentumZ{scheme};
    default: break;
  }
  if (scheme == DerivativeScheme::Spectral) return SpectralKinetic{dyn.masses()};
  return StencilKinetic{dyn.masses()};
}

struct ConservationReport {
  ConservedQuantity quantity = ConservedQuantity::Momentum;
  std::vector<long> residual_steps;         // steps at which the identity was checked
  std::vector<double> residuals;            // absolute identity residual
  std::vector<double> relative_residuals;   // residual over the size of one stochastic term
  double drift = 0.0;                       // |<Q>(T) - <Q>(0)|, normalised expectations
  double relative_drift = 0.0;
  double cumulative_drift = 0.0;            // sum over steps of |<Q>(n+1) - <Q>(n)|
  double spacing = 0.0;
  double dt = 0.0;
  double gain = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;

  double max_residual() const {
    return residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
  }
  double max_relative_residual() const {
    return relative_residuals.empty() ? 0.0
                                      : *std::max_element(relative_residuals.begin(), relative_residuals.end());
  }
};

/// Endpoint and total-variation drift of a recorded normalised expectation.
/// The total variation only sees every step when the record has one sample
/// per step.
inline ConservationReport conserved_drift(const TrajectoryRecord& rec, ConservedQuantity q) {
  if (rec.expectations.empty()) throw std::invalid_argument("trajectory was recorded without expectations");
  ConservationReport r;
  r.quantity = q;
  r.seed = rec.seed;
  const double q0 = quantity_of(rec.expectations.front().total, q);
  const double q1 = quantity_of(rec.expectations.back().total, q);
  r.drift = std::abs(q1 - q0);
  r.relative_drift = q0 != 0.0 ? r.drift / std::abs(q0) : r.drift;
  for (std::size_t i = 1; i < rec.expectations.size(); ++i)
    r.cumulative_drift +=
        std::abs(quantity_of(rec.expectations[i].total, q) - quantity_of(rec.expectations[i - 1].total, q));
  return r;
}

/// One trajectory with per-step bookkeeping of the conservation identities.
struct ConservationRun {
  TrajectoryRecord record;
  ConservationReport report;
  std::vector<double> quantity;                 // normalised <Q>, index 0 initial
  std::vector<double> kinetic_energy;           // <T>, index 0 initial
  std::vector<Complex> middle_coefficients;     // per step
  std::vector<double> positive_terms;           // per step
  double deviation_rms = 0.0;                   // sqrt(sum |c|^2 dt)
  double min_positive_term = 0.0;

  /// Largest excursion of <T> from its initial value.
  double kinetic_energy_change() const {
    double m = 0.0;
    for (double e : kinetic_energy) m = std::max(m, std::abs(e - kinetic_energy.front()));
    return m;
  }
};

struct ConservationOptions {
  ConservedQuantity quantity = ConservedQuantity::Momentum;
  DerivativeScheme residual_scheme = DerivativeScheme::Stencil;
  bool energy_terms = false;
  long residual_every = 1;  // check the identity on steps 1, 1 + k, 1 + 2k, ...
};

inline double normalized_expectation(const LinearOperator& q, const HilbertState& s) {
  return expectation(q, s).real() / norm_squared(s);
}

/// Runs one trajectory without absorption, tracking <Q> every step and the
/// identity residual every `residual_every` steps.
inline ConservationRun run_conservation(const HilbertState& initial, const Dynamics& dyn, IntegratorConfig cfg,
                                        std::uint64_t seed, const ConservationOptions& opts = {}) {
  if (opts.residual_every < 1) throw std::domain_error("residual stride must be at least 1");
  cfg.stop_on_absorption = false;
  ConservationRun run;
  const LinearOperator q = quantity_operator(opts.quantity, dyn, opts.residual_scheme);
  const LinearOperator tracked = quantity_operator(opts.quantity, dyn, dyn.derivative_scheme());
  const LinearOperator kinetic = dyn.is_grid() ? dyn.kinetic_operator() : LinearOperator(DiagonalMultiply{});
  run.quantity.push_back(normalized_expectation(tracked, initial));
  if (opts.energy_terms) run.kinetic_energy.push_back(normalized_expectation(kinetic, initial));
  auto observe = [&](const StepContext& ctx) {
    run.quantity.push_back(normalized_expectation(tracked, ctx.after));
    if ((ctx.step - 1) % opts.residual_every == 0) {
      const ProportionalityResidual r =
          pointwise_proportionality_check(ctx.before, ctx.operators, ctx.info.dxi, dyn.dt(), q);
      run.report.residual_steps.push_back(ctx.step);
      run.report.residuals.push_back(r.absolute);
      run.report.relative_residuals.push_back(r.relative);
    }
    if (opts.energy_terms) {
      const EnergyDeviationTerms t = energy_deviation_terms(ctx.before, dyn, ctx.operators, ctx.info.dxi);
      run.middle_coefficients.push_back(t.middle_coefficient);
      run.positive_terms.push_back(t.positive_definite_term);
      run.kinetic_energy.push_back(normalized_expectation(kinetic, ctx.after));
    }
  };
  run.record = run_trajectory(initial, dyn, cfg, seed, 0, observe);
  if (run.record.aborted) throw NumericalAbort("conservation run aborted: " + run.record.abort_reason);
  ConservationReport& rep = run.report;
  rep.quantity = opts.quantity;
  const double q0 = run.quantity.front();
  rep.drift = std::abs(run.quantity.back() - q0);
  rep.relative_drift = q0 != 0.0 ? rep.drift / std::abs(q0) : rep.drift;
  for (std::size_t i = 1; i < run.quantity.size(); ++i) rep.cumulative_drift += std::abs(run.quantity[i] - run.quantity[i - 1]);
  rep.spacing = dyn.is_grid() ? dyn.layout().spacing() : 0.0;
  rep.dt = cfg.dt;
  rep.gain = cfg.gain;
  rep.seed = seed;
  double sum = 0.0;
  for (const Complex& c : run.middle_coefficients) sum += std::norm(c) * cfg.dt;
  run.deviation_rms = std::sqrt(sum);
  run.min_positive_term = run.positive_terms.empty()
                              ? 0.0
                              : *std::min_element(run.positive_terms.begin(), run.positive_terms.end());
  return run;
}

/// coarse / fine; an order-p method refined by 2 gives about 2^p.
inline double refinement_ratio(double coarse, double fine) {
  if (fine == 0.0) return coarse == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return coarse / fine;
}

}  // namespace icollapse
