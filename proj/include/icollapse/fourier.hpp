#pragma once

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "icollapse/grid.hpp"

namespace icollapse {

/// Multi-dimensional DFT over a grid layout. Plans are created once per
/// (axes, points) shape and shared; fftw_execute_dft is thread safe, the
/// planner is not, so planning is serialised.
class FourierTransform {
 public:
  explicit FourierTransform(const GridLayout& layout) : plans_(plans_for(layout)), size_(layout.size()) {}

  void forward(ComplexVector& v) const { execute(plans_->forward, v); }

  /// Inverse transform including the 1/N normalisation.
  void inverse(ComplexVector& v) const {
    execute(plans_->backward, v);
    v /= static_cast<double>(size_);
  }

 private:
  struct Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    ~Plans() {
      if (forward) fftw_destroy_plan(forward);
      if (backward) fftw_destroy_plan(backward);
    }
  };

  void execute(fftw_plan plan, ComplexVector& v) const {
    if (v.size() != size_) throw StructuralError("FFT length mismatch");
    auto* data = reinterpret_cast<fftw_complex*>(v.data());
    fftw_execute_dft(plan, data, data);
  }

  static std::shared_ptr<const Plans> plans_for(const GridLayout& layout) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const Plans>> cache;
    const std::lock_guard lock(mutex);
    const auto key = std::make_pair(layout.axes(), layout.points());
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    std::vector<int> shape(layout.axes(), layout.points());
    auto* scratch = fftw_alloc_complex(static_cast<std::size_t>(layout.size()));
    auto plans = std::make_shared<Plans>();
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plans->forward = fftw_plan_dft(layout.axes(), shape.data(), scratch, scratch, FFTW_FORWARD, flags);
    plans->backward = fftw_plan_dft(layout.axes(), shape.data(), scratch, scratch, FFTW_BACKWARD, flags);
    fftw_free(scratch);
    cache.emplace(key, plans);
    return plans;
  }

  std::shared_ptr<const Plans> plans_;
  Index size_;
};

}  // namespace icollapse
