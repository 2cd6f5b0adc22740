#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "icollapse/errors.hpp"

namespace icollapse {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};

/// Periodic box [-extent, extent) sampled with `points_per_axis` points on
/// each of `dims` axes per particle.
struct GridSpec {
  int dims = 1;
  int points_per_axis = 64;
  double extent = 10.0;

  double spacing() const { return 2.0 * extent / points_per_axis; }

  void validate() const {
    if (dims != 1 && dims != 2) throw StructuralError("grid dims must be 1 or 2");
    const int n = points_per_axis;
    if (n < 8 || (n & (n - 1)) != 0)
      throw StructuralError("points_per_axis must be a power of two >= 8");
    if (!(extent > 0.0)) throw StructuralError("grid extent must be positive");
  }

  bool operator==(const GridSpec&) const = default;
};

inline constexpr int kMaxGridParticles = 3;

/// Flattened row-major layout of the configuration-space grid. Axis
/// `particle * dims + d` is coordinate `d` of `particle`; axis 0 varies slowest.
class GridLayout {
 public:
  GridLayout(const GridSpec& spec, int particles) : spec_(spec), particles_(particles) {
    spec_.validate();
    if (particles < 1 || particles > kMaxGridParticles)
      throw StructuralError("grid backend supports 1 to 3 particles");
    axes_ = particles * spec.dims;
    strides_.assign(axes_, 1);
    for (int a = axes_ - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * spec.points_per_axis;
    size_ = strides_[0] * spec.points_per_axis;
  }

  const GridSpec& spec() const { return spec_; }
  int particles() const { return particles_; }
  int dims() const { return spec_.dims; }
  int axes() const { return axes_; }
  int points() const { return spec_.points_per_axis; }
  Index size() const { return size_; }
  Index stride(int axis) const { return strides_[axis]; }
  double spacing() const { return spec_.spacing(); }
  double volume_element() const { return std::pow(spacing(), axes_); }

  int axis_of(int particle, int dim) const { return particle * spec_.dims + dim; }

  int coordinate_index(Index flat, int axis) const {
    return static_cast<int>((flat / strides_[axis]) % spec_.points_per_axis);
  }
  double coordinate(int i) const { return -spec_.extent + i * spacing(); }
  double coordinate_at(Index flat, int axis) const {
    return coordinate(coordinate_index(flat, axis));
  }

  /// Flat index of the neighbour `offset` points along `axis` (periodic).
  Index shifted(Index flat, int axis, int offset) const {
    const int n = spec_.points_per_axis;
    const int i = coordinate_index(flat, axis);
    int j = (i + offset) % n;
    if (j < 0) j += n;
    return flat + static_cast<Index>(j - i) * strides_[axis];
  }

  /// Angular wavenumber of FFT bin `i` in standard ordering.
  double wavenumber(int i) const {
    const int n = spec_.points_per_axis;
    const int m = i < n / 2 ? i : i - n;
    return 2.0 * std::numbers::pi * m / (n * spacing());
  }

  /// Minimum-image separation of particles j and k along dimension d, using
  /// grid index differences so the value is exactly translation invariant.
  double separation(Index flat, int j, int k, int d) const {
    const int n = spec_.points_per_axis;
    int diff = coordinate_index(flat, axis_of(j, d)) - coordinate_index(flat, axis_of(k, d));
    diff %= n;
    if (diff < -n / 2) diff += n;
    if (diff >= n / 2) diff -= n;
    return diff * spacing();
  }

 private:
  GridSpec spec_;
  int particles_;
  int axes_ = 0;
  Index size_ = 0;
  std::vector<Index> strides_;
};

}  // namespace icollapse
