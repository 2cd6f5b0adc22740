#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "icollapse/branches.hpp"
#include "icollapse/operators.hpp"

namespace icollapse {

namespace si {
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double electron_volt = 1.602176634e-19;  // J
inline constexpr double boltzmann = 1.380649e-23;         // J / K
inline constexpr double speed_of_light = 2.99792458e8;    // m / s
inline constexpr double seconds_per_year = 3.16e7;
}  // namespace si

/// Largest |V - <V>| / ((m_j + m_k) c^2) treated as nonrelativistic.
inline constexpr double kNonrelativisticRatio = 1e-3;

/// |<V>| below this fraction of sup|V| means no interaction is in progress.
inline constexpr double kDegenerateProjection = 1e-14;

/// Pair potential on the grid with its precomputed closed-form fields.
struct GridChannel {
  PairPotential potential;
  PairFields fields;
  double mass_j = 1.0;
  double mass_k = 1.0;
};

/// Pair on a finite basis: a diagonal potential and a supplied rate, since the
/// finite backend has no spatial derivatives to build the rate from.
struct FiniteChannel {
  RealVector potential;
  int j = 0;
  int k = 1;
  double mass_j = 1.0;
  double mass_k = 1.0;
  double gamma = 1.0;
};

using CollapseChannel = std::variant<GridChannel, FiniteChannel>;

inline GridChannel make_grid_channel(const PairPotential& p, const GridBasis& basis) {
  const GridLayout layout = basis.layout();
  return GridChannel{p, pair_fields(p, layout), basis.particles.at(p.j).mass, basis.particles.at(p.k).mass};
}

/// <psi|V|psi> / <psi|psi> for a diagonal potential.
inline double mean_potential(const HilbertState& state, const RealVector& v) {
  const double total = norm_squared(state);
  return state.amplitudes().cwiseAbs2().dot(v) * state.weight() / total;
}

/// psi_jk = [V / <psi|V|psi>] psi, unnormalised.
inline HilbertState interacting_component(const HilbertState& state, const RealVector& v) {
  if (v.size() != state.size()) throw StructuralError("potential field length mismatch");
  const double mean = state.amplitudes().cwiseAbs2().dot(v) * state.weight();
  const double scale = v.cwiseAbs().maxCoeff();
  if (!(std::abs(mean) > kDegenerateProjection * scale))
    throw DegenerateProjection("<psi|V|psi> vanishes; no interaction in progress");
  return state.with_amplitudes((v / mean).cast<Complex>().cwiseProduct(state.amplitudes()));
}

namespace detail {

inline HilbertState normalized_component(const HilbertState& state, const RealVector& v) {
  return normalize(interacting_component(state, v));
}

/// d/dr of the pair's relative coordinate along dimension d at fixed centre of
/// mass: (m_k d_j - m_j d_k) / (m_j + m_k).
inline ComplexVector relative_derivative(const GridLayout& layout, const ComplexVector& v, int j, int k, double mj,
                                         double mk, int d, DerivativeScheme scheme) {
  const double total = mj + mk;
  return (mk * derivative(layout, v, layout.axis_of(j, d), scheme) -
          mj * derivative(layout, v, layout.axis_of(k, d), scheme)) /
         total;
}

/// d^2 psi / dr^2 along the radial direction of the pair separation.
inline ComplexVector radial_second_derivative(const GridLayout& layout, const ComplexVector& psi, int j, int k,
                                              double mj, double mk, DerivativeScheme scheme) {
  const double total = mj + mk;
  if (layout.dims() == 1) {
    const int aj = layout.axis_of(j, 0), ak = layout.axis_of(k, 0);
    const ComplexVector mixed = derivative(layout, derivative(layout, psi, aj, scheme), ak, scheme);
    return ((mk * mk) * second_derivative(layout, psi, aj, scheme) - (2.0 * mj * mk) * mixed +
            (mj * mj) * second_derivative(layout, psi, ak, scheme)) /
           (total * total);
  }
  // Unit vector of the separation; left at zero where r = 0.
  const int dims = layout.dims();
  std::vector<RealVector> unit(dims, RealVector(layout.size()));
  for (Index i = 0; i < layout.size(); ++i) {
    double s = 0.0;
    for (int d = 0; d < dims; ++d) {
      unit[d][i] = layout.separation(i, j, k, d);
      s += unit[d][i] * unit[d][i];
    }
    const double r = std::sqrt(s);
    for (int d = 0; d < dims; ++d) unit[d][i] = r > 0.0 ? unit[d][i] / r : 0.0;
  }
  auto radial = [&](const ComplexVector& v) {
    ComplexVector out = ComplexVector::Zero(v.size());
    for (int d = 0; d < dims; ++d)
      out += unit[d].cast<Complex>().cwiseProduct(relative_derivative(layout, v, j, k, mj, mk, d, scheme));
    return out;
  };
  return radial(radial(psi));
}

}  // namespace detail

/// Magnitude of the rate of change of potential energy carried by the
/// normalised interacting component:
///   | i int [ |psi|^2 (lap_j V / 2m_j + lap_k V / 2m_k)
///             + psi* grad_j V . (grad_j psi / m_j - grad_k psi / m_k) ] |.
/// Zero when no interaction is in progress.
inline double rate_numerator(const HilbertState& state, const GridChannel& ch,
                             DerivativeScheme scheme = DerivativeScheme::Stencil) {
  const GridLayout& layout = state.layout();
  const auto& f = ch.fields;
  HilbertState comp = [&] {
    try {
      return detail::normalized_component(state, f.value);
    } catch (const DegenerateProjection&) {
      return state.with_amplitudes(ComplexVector::Zero(state.size()));
    }
  }();
  const ComplexVector& psi = comp.amplitudes();
  if (psi.squaredNorm() == 0.0) return 0.0;

  const double curvature = 1.0 / (2.0 * ch.mass_j) + 1.0 / (2.0 * ch.mass_k);
  Complex total = psi.cwiseAbs2().dot(f.laplacian) * curvature;
  for (int d = 0; d < layout.dims(); ++d) {
    const ComplexVector flow = derivative(layout, psi, layout.axis_of(ch.potential.j, d), scheme) / ch.mass_j -
                               derivative(layout, psi, layout.axis_of(ch.potential.k, d), scheme) / ch.mass_k;
    total += psi.dot(f.gradient_j[d].cast<Complex>().cwiseProduct(flow));
  }
  return std::abs(kI * total) * comp.weight();
}

/// Denominator convention for attractive potentials: the effective potential
/// of the lowest available state, taken with zero orbital angular momentum, so
/// its norm is the depth sup|V|.
inline double lowest_state_potential_norm(const PairPotential& p) { return p.sup_norm(); }

/// Maximum possible potential-energy change for the interacting component.
/// Repulsive potentials: <V> + radial kinetic energy of the normalised
/// component. Attractive potentials: lowest_state_potential_norm.
inline double rate_denominator(const HilbertState& state, const GridChannel& ch,
                               DerivativeScheme scheme = DerivativeScheme::Stencil) {
  const HilbertState comp = detail::normalized_component(state, ch.fields.value);  // throws when empty
  if (ch.potential.sign() < 0) return lowest_state_potential_norm(ch.potential);
  const GridLayout& layout = state.layout();
  const ComplexVector& psi = comp.amplitudes();
  const double reduced = ch.mass_j * ch.mass_k / (ch.mass_j + ch.mass_k);
  const ComplexVector d2 = detail::radial_second_derivative(layout, psi, ch.potential.j, ch.potential.k, ch.mass_j,
                                                            ch.mass_k, scheme);
  const Complex value =
      (psi.cwiseAbs2().dot(ch.fields.value) + psi.dot(-d2 / (2.0 * reduced))) * comp.weight();
  return std::abs(value.real());
}

struct RateParams {
  double numerator = 0.0;
  double denominator = 0.0;
  double gamma = 0.0;
};

/// Rate parameter gamma = numerator / denominator; all zero when there is no
/// interacting component.
inline RateParams rate_parameters(const HilbertState& state, const GridChannel& ch,
                                  DerivativeScheme scheme = DerivativeScheme::Stencil) {
  RateParams r;
  try {
    r.denominator = rate_denominator(state, ch, scheme);
  } catch (const DegenerateProjection&) {
    return r;
  }
  r.numerator = rate_numerator(state, ch, scheme);
  r.gamma = r.denominator > 0.0 ? r.numerator / r.denominator : 0.0;
  return r;
}

inline double gamma(const HilbertState& state, const GridChannel& ch,
                    DerivativeScheme scheme = DerivativeScheme::Stencil) {
  return rate_parameters(state, ch, scheme).gamma;
}

/// Diagonal stochastic operator for one pair:
///   gain * sqrt(gamma) * (V - <V>) / ((m_j + m_k) c^2).
struct CollapseOperator {
  std::pair<int, int> pair{0, 1};
  RealVector centered_potential;  // V - <V>
  double mean_potential = 0.0;
  double energy_denominator = 1.0;
  double gamma = 0.0;
  double gain = 1.0;
  bool nonrelativistic = true;
  RealVector field;

  double strength() const { return gain * std::sqrt(gamma) / energy_denominator; }
  bool is_zero() const { return strength() == 0.0 || centered_potential.cwiseAbs().maxCoeff() == 0.0; }
};

namespace detail {

inline CollapseOperator assemble(const HilbertState& state, const RealVector& v, std::pair<int, int> pair,
                                 double energy_denominator, double gamma_value, double gain) {
  if (!(energy_denominator > 0.0)) throw std::domain_error("energy denominator must be positive");
  if (gamma_value < 0.0) throw std::domain_error("rate parameter must be non-negative");
  CollapseOperator op;
  op.pair = pair;
  op.mean_potential = mean_potential(state, v);
  op.centered_potential = v.array() - op.mean_potential;
  op.energy_denominator = energy_denominator;
  op.gamma = gamma_value;
  op.gain = gain;
  op.nonrelativistic =
      op.centered_potential.cwiseAbs().maxCoeff() / energy_denominator <= kNonrelativisticRatio;
  op.field = op.strength() * op.centered_potential;
  return op;
}

}  // namespace detail

struct CollapseSettings {
  double gain = 1.0;
  double c = 1.0;
  DerivativeScheme scheme = DerivativeScheme::Stencil;
};

inline CollapseOperator build_collapse_operator(const HilbertState& state, const CollapseChannel& channel,
                                                const CollapseSettings& settings) {
  const double c2 = settings.c * settings.c;
  return std::visit(
      [&](const auto& ch) {
        using T = std::decay_t<decltype(ch)>;
        const double denom = (ch.mass_j + ch.mass_k) * c2;
        if constexpr (std::is_same_v<T, GridChannel>) {
          const double g = gamma(state, ch, settings.scheme);
          return detail::assemble(state, ch.fields.value, {ch.potential.j, ch.potential.k}, denom, g, settings.gain);
        } else {
          if (ch.potential.size() != state.size()) throw StructuralError("channel potential length mismatch");
          return detail::assemble(state, ch.potential, {ch.j, ch.k}, denom, ch.gamma, settings.gain);
        }
      },
      channel);
}

/// Rebuilds every pair's operator from the current state.
inline std::vector<CollapseOperator> collapse_sum(const HilbertState& state, const std::vector<CollapseChannel>& channels,
                                                  const CollapseSettings& settings) {
  std::vector<CollapseOperator> ops;
  ops.reserve(channels.size());
  for (const auto& ch : channels) ops.push_back(build_collapse_operator(state, ch, settings));
  return ops;
}

/// Sum of the operators' diagonal fields.
inline RealVector combined_field(const std::vector<CollapseOperator>& ops, Index size) {
  RealVector total = RealVector::Zero(size);
  for (const auto& op : ops) {
    if (op.field.size() != size) throw StructuralError("collapse operator length mismatch");
    total += op.field;
  }
  return total;
}

/// hbar / Delta V in natural units.
inline double characteristic_time(double delta_v) {
  if (!(delta_v > 0.0)) throw std::domain_error("characteristic time needs a positive energy change");
  return 1.0 / delta_v;
}

/// hbar / Delta V with Delta V in joules; result in seconds.
inline double characteristic_time_si(double delta_v_joules) {
  if (!(delta_v_joules > 0.0)) throw std::domain_error("characteristic time needs a positive energy change");
  return si::hbar / delta_v_joules;
}

inline double characteristic_time_ev(double delta_v_ev) {
  return characteristic_time_si(delta_v_ev * si::electron_volt);
}

}  // namespace icollapse
