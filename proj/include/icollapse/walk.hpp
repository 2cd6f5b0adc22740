#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "icollapse/integrator.hpp"
#include "icollapse/wiener.hpp"

namespace icollapse {

enum class StepMode { Constant, Sampled };

/// Random signs drawn one bit at a time from a 64-bit engine.
class SignSource {
 public:
  explicit SignSource(std::mt19937_64 engine) : engine_(std::move(engine)) {}

  double sign() {
    if (left_ == 0) {
      bits_ = engine_();
      left_ = 64;
    }
    const double s = (bits_ & 1u) ? 1.0 : -1.0;
    bits_ >>= 1;
    --left_;
    return s;
  }

  /// Uniform on (0, 1].
  double unit() { return 1.0 - std::ldexp(static_cast<double>(engine_() >> 11), -53); }

 private:
  std::mt19937_64 engine_;
  std::uint64_t bits_ = 0;
  int left_ = 0;
};

/// Weight mu^2 of the interacting branch and the per-step kick scale s. Each
/// step moves the weight by +-mu^2 (1 - mu^2) s with equal probability.
struct WalkState {
  double weight = 0.5;
  double step_scale = 0.05;
  StepMode mode = StepMode::Constant;

  bool absorbed() const { return weight <= 0.0 || weight >= 1.0; }
};

inline void validate(const WalkState& w) {
  if (!(w.step_scale > 0.0 && w.step_scale <= 1.0)) throw std::domain_error("step scale must lie in (0, 1]");
  if (!(w.weight >= 0.0 && w.weight <= 1.0)) throw std::domain_error("walk weight must lie in [0, 1]");
}

inline void walk_step(WalkState& w, SignSource& rng) {
  if (w.absorbed()) return;
  const double s = w.mode == StepMode::Sampled ? w.step_scale * rng.unit() : w.step_scale;
  const double delta = w.weight * (1.0 - w.weight) * s;
  w.weight = std::clamp(w.weight + rng.sign() * delta, 0.0, 1.0);
}

/// Default barrier s^2 / 4: the multiplicative walk only reaches 0 or 1
/// asymptotically, so absorption is declared inside [theta, 1 - theta]'s
/// complement.
inline double default_theta(double step_scale) { return 0.25 * step_scale * step_scale; }

struct AbsorbResult {
  int outcome = -1;  // 1: interacting branch, 0: noninteracting, -1: not absorbed
  long steps = 0;
  bool absorbed() const { return outcome >= 0; }
};

inline AbsorbResult absorb(WalkState w, long max_steps, SignSource& rng, double theta = -1.0) {
  validate(w);
  if (theta < 0.0) theta = default_theta(w.step_scale);
  AbsorbResult r;
  while (r.steps < max_steps) {
    if (w.weight <= theta) return {0, r.steps};
    if (w.weight >= 1.0 - theta) return {1, r.steps};
    walk_step(w, rng);
    ++r.steps;
  }
  if (w.weight <= theta) r.outcome = 0;
  if (w.weight >= 1.0 - theta) r.outcome = 1;
  return r;
}

/// Expected number of steps to leave (theta, 1 - theta) from x for a walk
/// whose step has variance x^2 (1 - x)^2 lambda^2, from the continuum limit
///   lambda^2 x^2 (1 - x)^2 T'' / 2 = -1,  T(theta) = T(1 - theta) = 0.
inline double mean_absorption_steps(double x, double lambda, double theta) {
  auto g = [](double y) { return (1.0 - 2.0 * y) * std::log(y / (1.0 - y)); };
  if (x <= theta || x >= 1.0 - theta) return 0.0;
  return 2.0 / (lambda * lambda) * (g(x) - g(theta));
}

/// Step scale of a walk whose per-step RMS push matches the two-level SDE with
/// operator strength `strength` on a unit potential gap.
inline double matched_step_scale(double strength, double dt, bool real_noise = false) {
  return strength * std::sqrt((real_noise ? 4.0 : 2.0) * dt);
}

struct ScanRow {
  double start = 0.0;
  BinomialEstimate hits;
  long unabsorbed = 0;
  double mean_steps = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = a x + b.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("line fit needs two or more paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.slope * x[i] + f.intercept);
    sse += e * e;
  }
  f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (x.size() > 2) {
    const double s2 = sse / (n - 2.0);
    f.slope_se = std::sqrt(s2 / sxx);
    f.intercept_se = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  }
  return f;
}

struct ScanTable {
  double step_scale = 0.0;
  double theta = 0.0;
  StepMode mode = StepMode::Constant;
  long walks_per_point = 0;
  std::uint64_t seed = 0;
  std::vector<ScanRow> rows;
  LineFit fit;
};

struct ScanOptions {
  StepMode mode = StepMode::Constant;
  double theta = -1.0;  // negative: s^2 / 4
  long max_steps = std::numeric_limits<long>::max();
  unsigned threads = 0;
};

/// Absorption probability against starting weight. Walks of each point are
/// split into blocks of 1024; block b of point p draws from stream
/// p * blocks_per_point + b of `seed`.
inline ScanTable born_linearity_scan(double step_scale, const std::vector<double>& starts, long walks_per_point,
                                     std::uint64_t seed, const ScanOptions& opts = {}) {
  if (walks_per_point < 1) throw std::domain_error("scan needs at least one walk per point");
  for (double x : starts)
    if (!(x > 0.0 && x < 1.0)) throw std::domain_error("starting weights must lie in (0, 1)");
  ScanTable t;
  t.step_scale = step_scale;
  t.theta = opts.theta < 0.0 ? default_theta(step_scale) : opts.theta;
  t.mode = opts.mode;
  t.walks_per_point = walks_per_point;
  t.seed = seed;

  // One engine per block of walks keeps seeding cost negligible.
  constexpr long kBlock = 1024;
  const long blocks_per_point = (walks_per_point + kBlock - 1) / kBlock;
  const long jobs = static_cast<long>(starts.size()) * blocks_per_point;
  struct Tally {
    long hits = 0, unabsorbed = 0;
    double steps = 0.0;
  };
  std::vector<Tally> tallies(static_cast<std::size_t>(jobs));
  detail::parallel_for(jobs, opts.threads, [&](long job) {
    const long point = job / blocks_per_point, block = job % blocks_per_point;
    SignSource rng(make_engine(seed, static_cast<std::uint64_t>(job)));
    const long begin = block * kBlock, end = std::min(walks_per_point, begin + kBlock);
    Tally& tally = tallies[static_cast<std::size_t>(job)];
    for (long i = begin; i < end; ++i) {
      const AbsorbResult r =
          absorb(WalkState{starts[static_cast<std::size_t>(point)], step_scale, opts.mode}, opts.max_steps, rng, t.theta);
      tally.hits += r.outcome == 1;
      tally.unabsorbed += r.outcome < 0;
      tally.steps += static_cast<double>(r.steps);
    }
  });

  std::vector<double> xs, ys;
  for (std::size_t p = 0; p < starts.size(); ++p) {
    Tally sum;
    for (long b = 0; b < blocks_per_point; ++b) {
      const Tally& tb = tallies[p * static_cast<std::size_t>(blocks_per_point) + static_cast<std::size_t>(b)];
      sum.hits += tb.hits;
      sum.unabsorbed += tb.unabsorbed;
      sum.steps += tb.steps;
    }
    ScanRow row;
    row.start = starts[p];
    row.hits = binomial_estimate(sum.hits, walks_per_point);
    row.unabsorbed = sum.unabsorbed;
    row.mean_steps = sum.steps / static_cast<double>(walks_per_point);
    t.rows.push_back(row);
    xs.push_back(row.start);
    ys.push_back(row.hits.p);
  }
  if (starts.size() >= 2) t.fit = fit_line(xs, ys);
  return t;
}

/// Sample mean of the weight after each of n_steps steps, over n_walks walks.
struct WalkSeries {
  std::vector<double> mean;
  std::vector<double> stderr_;
};

inline WalkSeries walk_martingale_series(const WalkState& start, long n_walks, long n_steps, std::uint64_t seed) {
  validate(start);
  WalkSeries out;
  std::vector<double> sum(static_cast<std::size_t>(n_steps + 1), 0.0), sum2(sum.size(), 0.0);
  SignSource rng(make_engine(seed, 0));
  for (long i = 0; i < n_walks; ++i) {
    WalkState w = start;
    for (long s = 0; s <= n_steps; ++s) {
      if (s > 0) walk_step(w, rng);
      sum[static_cast<std::size_t>(s)] += w.weight;
      sum2[static_cast<std::size_t>(s)] += w.weight * w.weight;
    }
  }
  const double n = static_cast<double>(n_walks);
  for (std::size_t s = 0; s < sum.size(); ++s) {
    out.mean.push_back(sum[s] / n);
    const double var = n > 1 ? std::max(0.0, (sum2[s] - sum[s] * sum[s] / n) / (n - 1.0)) : 0.0;
    out.stderr_.push_back(std::sqrt(var / n));
  }
  return out;
}

/// Order-of-magnitude step count for a collapse built from kicks of size
/// ratio * floor: the sqrt(N) spread of N such steps reaches order one at
/// N = 1 / (ratio * floor)^2. Alongside it, the exact mean absorption time of
/// a constant-step walk from 1/2 between 0 and 1, x (1 - x) / delta^2.
struct StepCountEstimate {
  double ratio = 0.0;
  double floor = 0.0;
  double estimate = 0.0;
  double constant_step_mean = 0.0;
};

inline StepCountEstimate step_count_estimate(double ratio, double floor, double start = 0.5) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::domain_error("ratio must lie in (0, 1]");
  if (!(floor > 0.0 && floor <= 1.0)) throw std::domain_error("floor must lie in (0, 1]");
  const double inv = 1.0 / (ratio * floor);
  return {ratio, floor, inv * inv, start * (1.0 - start) * inv * inv};
}

}  // namespace icollapse
