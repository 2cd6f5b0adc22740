#pragma once

#include <cmath>
#include <vector>

#include "icollapse/operators.hpp"

namespace icollapse {

/// Split of the basis into the interacting (I) and noninteracting (O) parts of
/// a state with respect to one multiplicative potential.
struct BranchDecomposition {
  std::vector<bool> interacting;
  std::vector<bool> noninteracting;
  double weight_interacting = 0.0;     // mu* mu
  double weight_noninteracting = 0.0;  // nu* nu
};

namespace detail {

/// +1 or -1: which sign of (V - <V>) marks the interacting branch. I is where
/// V carries its dominant sign, so attractive wells are handled like barriers.
inline double branch_orientation(const RealVector& v, double mean) {
  if (mean != 0.0) return mean > 0.0 ? 1.0 : -1.0;
  Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  return v.size() > 0 && v[arg] < 0.0 ? -1.0 : 1.0;
}

}  // namespace detail

/// Masks by strict sign of the centred potential; exact zeros go to O.
inline BranchDecomposition branch_decompose(const HilbertState& state, const RealVector& v) {
  if (v.size() != state.size()) throw StructuralError("potential field length mismatch");
  const double total = norm_squared(state);
  const double mean = total > 0.0 ? (state.amplitudes().cwiseAbs2().dot(v) * state.weight()) / total : 0.0;
  const double orient = detail::branch_orientation(v, mean);

  BranchDecomposition out;
  out.interacting.assign(static_cast<std::size_t>(v.size()), false);
  out.noninteracting.assign(static_cast<std::size_t>(v.size()), true);
  double in = 0.0, outside = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double p = std::norm(state.amplitudes()[i]);
    if (orient * (v[i] - mean) > 0.0) {
      out.interacting[i] = true;
      out.noninteracting[i] = false;
      in += p;
    } else {
      outside += p;
    }
  }
  if (total > 0.0) {
    const double w = state.weight() / total;
    out.weight_interacting = in * w;
    out.weight_noninteracting = outside * w;
  }
  return out;
}

inline BranchDecomposition branch_decompose(const HilbertState& state, const LinearOperator& v_op) {
  if (!v_op.is_diagonal()) throw UnsupportedError("branch decomposition needs a multiplicative potential");
  const ComplexVector& d = v_op.diagonal_field();
  if (d.imag().cwiseAbs().maxCoeff() > 0.0) throw UnsupportedError("branch decomposition needs a real potential");
  return branch_decompose(state, RealVector(d.real()));
}

/// psi restricted to a mask (zero elsewhere).
inline HilbertState restrict_to(const HilbertState& state, const std::vector<bool>& mask) {
  ComplexVector a = state.amplitudes();
  for (Index i = 0; i < a.size(); ++i)
    if (!mask[i]) a[i] = 0.0;
  return state.with_amplitudes(std::move(a));
}

}  // namespace icollapse
