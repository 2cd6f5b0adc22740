#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "icollapse/fourier.hpp"
#include "icollapse/state.hpp"

namespace icollapse {

enum class DerivativeScheme { Stencil, Spectral };

namespace detail {

/// Calls body(line_start, i, stride) for each grid line along `axis`.
template <class F>
void for_each_line(const GridLayout& layout, int axis, F&& body) {
  const Index s = layout.stride(axis);
  const Index block = s * layout.points();
  for (Index b = 0; b < layout.size(); b += block)
    for (Index t = 0; t < s; ++t) body(b + t, s);
}

inline ComplexVector stencil_first(const GridLayout& layout, const ComplexVector& v, int axis) {
  const int n = layout.points();
  const double inv = 1.0 / (2.0 * layout.spacing());
  ComplexVector out(v.size());
  for_each_line(layout, axis, [&](Index start, Index s) {
    for (int i = 0; i < n; ++i) {
      const Index ip = start + ((i + 1) % n) * s;
      const Index im = start + ((i + n - 1) % n) * s;
      out[start + i * s] = (v[ip] - v[im]) * inv;
    }
  });
  return out;
}

inline ComplexVector stencil_second(const GridLayout& layout, const ComplexVector& v, int axis) {
  const int n = layout.points();
  const double inv = 1.0 / (layout.spacing() * layout.spacing());
  ComplexVector out(v.size());
  for_each_line(layout, axis, [&](Index start, Index s) {
    for (int i = 0; i < n; ++i) {
      const Index ic = start + i * s;
      const Index ip = start + ((i + 1) % n) * s;
      const Index im = start + ((i + n - 1) % n) * s;
      out[ic] = (v[ip] + v[im] - 2.0 * v[ic]) * inv;
    }
  });
  return out;
}

/// Multiply the spectrum by symbol(k_0, ..., k_{axes-1}).
template <class Symbol>
ComplexVector spectral_apply(const GridLayout& layout, const ComplexVector& v, Symbol&& symbol) {
  const FourierTransform fft(layout);
  ComplexVector w = v;
  fft.forward(w);
  std::vector<double> k(layout.axes());
  for (Index i = 0; i < w.size(); ++i) {
    for (int a = 0; a < layout.axes(); ++a) k[a] = layout.wavenumber(layout.coordinate_index(i, a));
    w[i] *= symbol(std::as_const(k));
  }
  fft.inverse(w);
  return w;
}

}  // namespace detail

/// d/dx along one grid axis.
inline ComplexVector derivative(const GridLayout& layout, const ComplexVector& v, int axis,
                                DerivativeScheme scheme) {
  if (scheme == DerivativeScheme::Stencil) return detail::stencil_first(layout, v, axis);
  return detail::spectral_apply(layout, v, [axis](const std::vector<double>& k) { return kI * k[axis]; });
}

inline ComplexVector second_derivative(const GridLayout& layout, const ComplexVector& v, int axis,
                                       DerivativeScheme scheme) {
  if (scheme == DerivativeScheme::Stencil) return detail::stencil_second(layout, v, axis);
  return detail::spectral_apply(layout, v,
                                [axis](const std::vector<double>& k) { return Complex(-k[axis] * k[axis]); });
}

/// sum_j (-1/2m_j) laplacian_j psi on a periodic grid.
inline ComplexVector kinetic_amplitudes(const HilbertState& state, const std::vector<double>& masses,
                                        DerivativeScheme scheme) {
  const GridLayout& layout = state.layout();
  if (static_cast<int>(masses.size()) != layout.particles())
    throw StructuralError("need one mass per particle");
  const ComplexVector& psi = state.amplitudes();
  if (scheme == DerivativeScheme::Spectral) {
    return detail::spectral_apply(layout, psi, [&](const std::vector<double>& k) {
      double e = 0.0;
      for (int a = 0; a < layout.axes(); ++a) e += k[a] * k[a] / (2.0 * masses[a / layout.dims()]);
      return Complex(e);
    });
  }
  ComplexVector out = ComplexVector::Zero(psi.size());
  for (int a = 0; a < layout.axes(); ++a)
    out -= detail::stencil_second(layout, psi, a) / (2.0 * masses[a / layout.dims()]);
  return out;
}

inline HilbertState apply_kinetic(const HilbertState& state, const std::vector<double>& masses,
                                  DerivativeScheme scheme = DerivativeScheme::Stencil) {
  return state.with_amplitudes(kinetic_amplitudes(state, masses, scheme));
}

/// Total momentum component -i sum_j d/dx_{j,component}.
inline HilbertState apply_momentum(const HilbertState& state, int component = 0,
                                   DerivativeScheme scheme = DerivativeScheme::Stencil) {
  const GridLayout& layout = state.layout();
  if (component < 0 || component >= layout.dims()) throw StructuralError("momentum component out of range");
  if (scheme == DerivativeScheme::Spectral) {
    return state.with_amplitudes(detail::spectral_apply(layout, state.amplitudes(), [&](const std::vector<double>& k) {
      double total = 0.0;
      for (int p = 0; p < layout.particles(); ++p) total += k[layout.axis_of(p, component)];
      return Complex(total);
    }));
  }
  ComplexVector out = ComplexVector::Zero(state.size());
  for (int p = 0; p < layout.particles(); ++p)
    out += detail::stencil_first(layout, state.amplitudes(), layout.axis_of(p, component));
  return state.with_amplitudes(-kI * out);
}

/// L_z = sum_j (x_j p_{y,j} - y_j p_{x,j}); needs two dimensions per particle.
inline HilbertState apply_angular_momentum_z(const HilbertState& state,
                                             DerivativeScheme scheme = DerivativeScheme::Stencil) {
  const GridLayout& layout = state.layout();
  if (layout.dims() != 2) throw UnsupportedError("angular momentum requires a 2-D grid");
  ComplexVector out = ComplexVector::Zero(state.size());
  for (int p = 0; p < layout.particles(); ++p) {
    const int ax = layout.axis_of(p, 0), ay = layout.axis_of(p, 1);
    const ComplexVector dy = derivative(layout, state.amplitudes(), ay, scheme);
    const ComplexVector dx = derivative(layout, state.amplitudes(), ax, scheme);
    for (Index i = 0; i < out.size(); ++i)
      out[i] += layout.coordinate_at(i, ax) * dy[i] - layout.coordinate_at(i, ay) * dx[i];
  }
  return state.with_amplitudes(-kI * out);
}

// ---------------------------------------------------------------------------

struct DiagonalMultiply {
  ComplexVector field;
};
struct StencilKinetic {
  std::vector<double> masses;
};
struct SpectralKinetic {
  std::vector<double> masses;
};
struct Momentum {
  int component = 0;
  DerivativeScheme scheme = DerivativeScheme::Stencil;
};
struct AngularMomentumZ {
  DerivativeScheme scheme = DerivativeScheme::Stencil;
};
struct FiniteMatrix {
  Eigen::MatrixXcd matrix;
};

/// Immutable linear operator on either backend.
class LinearOperator {
 public:
  using Kind = std::variant<DiagonalMultiply, StencilKinetic, SpectralKinetic, Momentum, AngularMomentumZ, FiniteMatrix>;

  template <class K>
    requires std::is_constructible_v<Kind, K>
  LinearOperator(K kind) : kind_(std::move(kind)) {}  // NOLINT(google-explicit-constructor)

  static LinearOperator identity(Index n) { return DiagonalMultiply{ComplexVector::Ones(n)}; }
  static LinearOperator diagonal(const RealVector& field) { return DiagonalMultiply{field.cast<Complex>()}; }
  static LinearOperator matrix(Eigen::MatrixXcd m) { return FiniteMatrix{std::move(m)}; }

  const Kind& kind() const { return kind_; }

  bool is_diagonal() const { return std::holds_alternative<DiagonalMultiply>(kind_); }

  const ComplexVector& diagonal_field() const {
    if (const auto* d = std::get_if<DiagonalMultiply>(&kind_)) return d->field;
    throw UnsupportedError("operator is not diagonal in the state basis");
  }

  bool is_hermitian(double tol = 1e-12) const {
    if (const auto* d = std::get_if<DiagonalMultiply>(&kind_)) return d->field.imag().cwiseAbs().maxCoeff() <= tol;
    if (const auto* m = std::get_if<FiniteMatrix>(&kind_)) return (m->matrix - m->matrix.adjoint()).norm() <= tol;
    return true;
  }

  HilbertState apply(const HilbertState& s) const {
    return std::visit([&](const auto& k) { return apply_kind(k, s); }, kind_);
  }

 private:
  static void check_size(Index n, const HilbertState& s) {
    if (n != s.size()) throw StructuralError("operator dimension does not match state basis");
  }
  static HilbertState apply_kind(const DiagonalMultiply& k, const HilbertState& s) {
    check_size(k.field.size(), s);
    return s.with_amplitudes(k.field.cwiseProduct(s.amplitudes()));
  }
  static HilbertState apply_kind(const StencilKinetic& k, const HilbertState& s) {
    return apply_kinetic(s, k.masses, DerivativeScheme::Stencil);
  }
  static HilbertState apply_kind(const SpectralKinetic& k, const HilbertState& s) {
    return apply_kinetic(s, k.masses, DerivativeScheme::Spectral);
  }
  static HilbertState apply_kind(const Momentum& k, const HilbertState& s) {
    return apply_momentum(s, k.component, k.scheme);
  }
  static HilbertState apply_kind(const AngularMomentumZ& k, const HilbertState& s) {
    return apply_angular_momentum_z(s, k.scheme);
  }
  static HilbertState apply_kind(const FiniteMatrix& k, const HilbertState& s) {
    check_size(k.matrix.cols(), s);
    if (k.matrix.rows() != k.matrix.cols()) throw StructuralError("finite operator must be square");
    return s.with_amplitudes(k.matrix * s.amplitudes());
  }

  Kind kind_;
};

/// <psi|Q|psi>. Hermitian Q gives a real value up to rounding.
inline Complex expectation(const LinearOperator& op, const HilbertState& state) {
  return inner(state, op.apply(state));
}

// ---------------------------------------------------------------------------
// Two-particle potentials. Both forms are functions of s = r^2, so value,
// gradient and Laplacian follow from f(s), f'(s) and f''(s).

/// g / sqrt(r^2 + a^2)
struct SoftCoulomb {
  double strength = 1.0;
  double softening = 1.0;
  bool operator==(const SoftCoulomb&) const = default;
};

/// V0 exp(-r^2 / (2 sigma^2)); negative V0 is an attractive well.
struct GaussianWell {
  double depth = -1.0;
  double width = 1.0;
  bool operator==(const GaussianWell&) const = default;
};

struct PairPotential {
  std::variant<SoftCoulomb, GaussianWell> form = GaussianWell{};
  int j = 0;
  int k = 1;

  void validate() const {
    if (j == k || j < 0 || k < 0) throw StructuralError("pair potential needs two distinct particles");
    std::visit(
        [](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, SoftCoulomb>) {
            if (!(f.softening > 0.0)) throw StructuralError("soft-Coulomb softening must be positive");
          } else {
            if (!(f.width > 0.0)) throw StructuralError("Gaussian well width must be positive");
          }
        },
        form);
  }

  /// +1 for repulsive (positive) potentials, -1 for attractive, 0 if identically zero.
  int sign() const {
    const double s = std::visit(
        [](const auto& f) {
          if constexpr (std::is_same_v<std::decay_t<decltype(f)>, SoftCoulomb>) return f.strength;
          else return f.depth;
        },
        form);
    return (s > 0) - (s < 0);
  }

  /// f(s), f'(s), f''(s) with s = r^2.
  std::array<double, 3> profile(double s) const {
    return std::visit(
        [s](const auto& f) -> std::array<double, 3> {
          if constexpr (std::is_same_v<std::decay_t<decltype(f)>, SoftCoulomb>) {
            const double q = s + f.softening * f.softening;
            const double v = f.strength / std::sqrt(q);
            return {v, -0.5 * v / q, 0.75 * v / (q * q)};
          } else {
            const double inv = 1.0 / (2.0 * f.width * f.width);
            const double v = f.depth * std::exp(-s * inv);
            return {v, -v * inv, v * inv * inv};
          }
        },
        form);
  }

  double value(double r) const { return profile(r * r)[0]; }

  /// sup |V| over all separations (attained at r = 0 for both forms).
  double sup_norm() const { return std::abs(profile(0.0)[0]); }

  bool operator==(const PairPotential&) const = default;
};

/// Value, gradient with respect to particle j, and Laplacian of V_jk sampled on
/// the grid from the closed forms. The gradient with respect to particle k is
/// the negative of `gradient_j`; the Laplacian is the same for both.
struct PairFields {
  RealVector value;
  std::vector<RealVector> gradient_j;  // one per spatial dimension
  RealVector laplacian;
};

inline PairFields pair_fields(const PairPotential& p, const GridLayout& layout) {
  p.validate();
  if (p.j >= layout.particles() || p.k >= layout.particles())
    throw StructuralError("pair potential refers to a particle not on the grid");
  const int dims = layout.dims();
  PairFields f;
  f.value.resize(layout.size());
  f.laplacian.resize(layout.size());
  f.gradient_j.assign(dims, RealVector(layout.size()));
  std::array<double, 2> r{};
  for (Index i = 0; i < layout.size(); ++i) {
    double s = 0.0;
    for (int d = 0; d < dims; ++d) {
      r[d] = layout.separation(i, p.j, p.k, d);
      s += r[d] * r[d];
    }
    const auto [v, dv, d2v] = p.profile(s);
    f.value[i] = v;
    for (int d = 0; d < dims; ++d) f.gradient_j[d][i] = 2.0 * dv * r[d];
    f.laplacian[i] = 2.0 * dims * dv + 4.0 * s * d2v;
  }
  return f;
}

inline PairFields pair_fields(const PairPotential& p, const HilbertState& state) {
  return pair_fields(p, state.layout());
}

inline RealVector potential_value(const PairPotential& p, const GridLayout& layout) {
  return pair_fields(p, layout).value;
}

/// dV/dx_{particle, dim}; zero for particles not in the pair.
inline RealVector potential_gradient(const PairPotential& p, const GridLayout& layout, int particle, int dim) {
  PairFields f = pair_fields(p, layout);
  if (particle == p.j) return std::move(f.gradient_j[dim]);
  if (particle == p.k) return -f.gradient_j[dim];
  return RealVector::Zero(layout.size());
}

inline RealVector potential_laplacian(const PairPotential& p, const GridLayout& layout, int particle) {
  if (particle != p.j && particle != p.k) return RealVector::Zero(layout.size());
  return pair_fields(p, layout).laplacian;
}

/// ||Q(V psi) - V(Q psi)|| / ||psi||.
inline double commutator_residual(const LinearOperator& q, const RealVector& v, const HilbertState& state) {
  if (v.size() != state.size()) throw StructuralError("potential field length mismatch");
  const ComplexVector vc = v.cast<Complex>();
  const HilbertState vpsi = state.with_amplitudes(vc.cwiseProduct(state.amplitudes()));
  const ComplexVector lhs = q.apply(vpsi).amplitudes();
  const ComplexVector rhs = vc.cwiseProduct(q.apply(state).amplitudes());
  return norm(state.with_amplitudes(lhs - rhs)) / norm(state);
}

inline double commutator_residual(const LinearOperator& q, const PairPotential& p, const HilbertState& state) {
  return commutator_residual(q, potential_value(p, state.layout()), state);
}

}  // namespace icollapse
