#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "icollapse/grid.hpp"

namespace icollapse {

/// Engine seeded from (seed, stream) through seed_seq, so neighbouring streams
/// are decorrelated and identical pairs replay identical sequences.
inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

/// The single global noise of one trajectory. Increments are complex circular,
/// dxi = (dW1 + i dW2)/sqrt(2) with dW ~ N(0, dt), so E[dxi* dxi] = dt and
/// E[dxi^2] = 0. With `real_noise` the increment is dW1 alone.
class WienerProcess {
 public:
  WienerProcess(std::uint64_t seed, std::uint64_t stream = 0, bool real_noise = false)
      : seed_(seed), stream_(stream), real_noise_(real_noise), engine_(make_engine(seed, stream)) {}

  Complex increment(double dt) {
    const double sd = std::sqrt(dt);
    Complex d;
    if (real_noise_) {
      d = Complex(sd * normal_(engine_), 0.0);
    } else {
      const double a = normal_(engine_), b = normal_(engine_);
      d = Complex(a, b) * (sd / std::sqrt(2.0));
    }
    accumulated_ += d;
    return d;
  }

  Complex accumulated() const { return accumulated_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  bool real_noise() const { return real_noise_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  bool real_noise_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  Complex accumulated_{0.0, 0.0};
};

}  // namespace icollapse
