#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "icollapse/grid.hpp"

namespace icollapse {

/// A particle in natural units (hbar = 1). The speed of light is a model
/// parameter, so the rest energy is computed on demand.
struct ParticleSpec {
  std::string label;
  double mass = 1.0;
  double charge = 0.0;

  double rest_energy(double c) const { return mass * c * c; }
  bool operator==(const ParticleSpec&) const = default;
};

struct GridBasis {
  GridSpec grid;
  std::vector<ParticleSpec> particles;

  GridLayout layout() const { return GridLayout(grid, static_cast<int>(particles.size())); }
  bool operator==(const GridBasis&) const = default;
};

struct FiniteBasis {
  std::vector<std::string> labels;
  bool operator==(const FiniteBasis&) const = default;
};

using Basis = std::variant<GridBasis, FiniteBasis>;

inline Index basis_cardinality(const Basis& basis) {
  if (const auto* g = std::get_if<GridBasis>(&basis)) return g->layout().size();
  return static_cast<Index>(std::get<FiniteBasis>(basis).labels.size());
}

/// Complex amplitudes over a grid or a labelled finite basis. The basis is
/// shared between copies; amplitudes are owned.
class HilbertState {
 public:
  HilbertState(Basis basis, ComplexVector amplitudes, double time = 0.0)
      : HilbertState(std::make_shared<const Basis>(std::move(basis)), std::move(amplitudes), time) {}

  HilbertState(std::shared_ptr<const Basis> basis, ComplexVector amplitudes, double time = 0.0)
      : basis_(std::move(basis)), amplitudes_(std::move(amplitudes)), time_(time) {
    if (basis_cardinality(*basis_) != amplitudes_.size())
      throw StructuralError("amplitude vector length does not match basis cardinality");
    if (const auto* g = std::get_if<GridBasis>(basis_.get())) layout_.emplace(g->layout());
  }

  const Basis& basis() const { return *basis_; }
  const std::shared_ptr<const Basis>& shared_basis() const { return basis_; }
  bool is_grid() const { return layout_.has_value(); }

  const GridBasis& grid_basis() const {
    if (!is_grid()) throw UnsupportedError("state is not on a grid basis");
    return std::get<GridBasis>(*basis_);
  }
  const GridLayout& layout() const {
    if (!is_grid()) throw UnsupportedError("state is not on a grid basis");
    return *layout_;
  }

  /// Quadrature weight of one basis point: h^D on grids, 1 on finite bases.
  double weight() const { return layout_ ? layout_->volume_element() : 1.0; }

  Index size() const { return amplitudes_.size(); }
  const ComplexVector& amplitudes() const { return amplitudes_; }
  ComplexVector& amplitudes() { return amplitudes_; }

  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  /// Same basis, new amplitudes.
  HilbertState with_amplitudes(ComplexVector amplitudes) const {
    return HilbertState(basis_, std::move(amplitudes), time_);
  }

 private:
  std::shared_ptr<const Basis> basis_;
  ComplexVector amplitudes_;
  double time_ = 0.0;
  std::optional<GridLayout> layout_;
};

inline void require_same_basis(const HilbertState& a, const HilbertState& b) {
  if (a.shared_basis() != b.shared_basis() && !(a.basis() == b.basis()))
    throw StructuralError("states live on different bases");
}

/// <a|b> including the grid volume element.
inline Complex inner(const HilbertState& a, const HilbertState& b) {
  require_same_basis(a, b);
  return a.amplitudes().dot(b.amplitudes()) * a.weight();
}

inline double norm_squared(const HilbertState& s) {
  return s.amplitudes().squaredNorm() * s.weight();
}

inline double norm(const HilbertState& s) { return std::sqrt(norm_squared(s)); }

inline HilbertState normalize(const HilbertState& s) {
  const double n = norm(s);
  if (!(n > 0.0) || !std::isfinite(n)) throw std::domain_error("cannot normalize a zero or non-finite state");
  return s.with_amplitudes(s.amplitudes() / n);
}

/// Integral of |psi|^2 over the points selected by `mask`.
inline double masked_weight(const HilbertState& s, const std::vector<bool>& mask) {
  if (static_cast<Index>(mask.size()) != s.size()) throw StructuralError("mask length mismatch");
  double total = 0.0;
  for (Index i = 0; i < s.size(); ++i)
    if (mask[i]) total += std::norm(s.amplitudes()[i]);
  return total * s.weight();
}

/// Sample f(x_0, ..., x_{axes-1}) on every grid point.
template <class F>
ComplexVector sample_on_grid(const GridLayout& layout, F&& f) {
  ComplexVector out(layout.size());
  std::vector<double> x(layout.axes());
  for (Index i = 0; i < layout.size(); ++i) {
    for (int a = 0; a < layout.axes(); ++a) x[a] = layout.coordinate_at(i, a);
    out[i] = f(std::as_const(x));
  }
  return out;
}

/// One-particle Gaussian factor exp(-(x-x0)^2/(4 sigma^2) + i k x + i b (x-x0)^2),
/// unnormalised; sigma is the standard deviation of |psi|^2 and b a chirp
/// (b < 0 converges, b > 0 spreads).
inline Complex gaussian_factor(double x, double center, double sigma, double momentum, double chirp = 0.0) {
  const double d = x - center;
  return std::exp(Complex(-d * d / (4.0 * sigma * sigma), momentum * x + chirp * d * d));
}

/// Product of independent Gaussians, one per grid axis, normalised on the grid.
inline HilbertState product_gaussian(const GridBasis& basis, const std::vector<double>& centers,
                                     const std::vector<double>& widths,
                                     const std::vector<double>& momenta) {
  const GridLayout layout = basis.layout();
  const auto n = static_cast<std::size_t>(layout.axes());
  if (centers.size() != n || widths.size() != n || momenta.size() != n)
    throw StructuralError("need one center/width/momentum per grid axis");
  ComplexVector amps = sample_on_grid(layout, [&](const std::vector<double>& x) {
    Complex v = 1.0;
    for (std::size_t a = 0; a < n; ++a) v *= gaussian_factor(x[a], centers[a], widths[a], momenta[a]);
    return v;
  });
  return normalize(HilbertState(basis, std::move(amps)));
}

/// Relative-motion and centre-of-mass packet for two particles.
struct TwoBodyPacket {
  std::vector<double> cm_center, cm_momentum;  // one entry per spatial dim
  double cm_width = 1.0;
  std::vector<double> rel_center, rel_momentum;  // r = x_0 - x_1
  double rel_width = 1.0;
  double rel_chirp = 0.0;  // radial phase b |r - r0|^2; isotropic when r0 = 0
};

/// psi(x_0, x_1) = Phi(X) chi(r) with X the centre of mass and r = x_0 - x_1.
/// Product in (X, r) keeps the relative-coordinate collapse operator from
/// touching the centre-of-mass factor.
inline HilbertState two_body_gaussian(const GridBasis& basis, const TwoBodyPacket& packet) {
  if (basis.particles.size() != 2) throw StructuralError("two_body_gaussian needs two particles");
  const GridLayout layout = basis.layout();
  const int dims = layout.dims();
  const double m0 = basis.particles[0].mass, m1 = basis.particles[1].mass, total = m0 + m1;
  auto sized = [&](const std::vector<double>& v) { return static_cast<int>(v.size()) == dims; };
  if (!sized(packet.cm_center) || !sized(packet.cm_momentum) || !sized(packet.rel_center) ||
      !sized(packet.rel_momentum))
    throw StructuralError("two-body packet vectors must have one entry per dimension");
  ComplexVector amps = sample_on_grid(layout, [&](const std::vector<double>& x) {
    Complex v = 1.0;
    for (int d = 0; d < dims; ++d) {
      const double x0 = x[layout.axis_of(0, d)], x1 = x[layout.axis_of(1, d)];
      const double com = (m0 * x0 + m1 * x1) / total;
      const double rel = x0 - x1;
      v *= gaussian_factor(com, packet.cm_center[d], packet.cm_width, packet.cm_momentum[d]);
      v *= gaussian_factor(rel, packet.rel_center[d], packet.rel_width, packet.rel_momentum[d], packet.rel_chirp);
    }
    return v;
  });
  return normalize(HilbertState(basis, std::move(amps)));
}

}  // namespace icollapse
