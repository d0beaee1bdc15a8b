#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "roughfio/vec.hpp"

namespace roughfio {

// Unnormalized multi-dimensional DFT on an N^dim periodic array (row-major,
// last axis fastest). Plans are created with FFTW_UNALIGNED so that any
// std::complex<double> buffer can be passed to execute().
class FftPlan {
 public:
  enum class Direction { forward = FFTW_FORWARD, backward = FFTW_BACKWARD };

  FftPlan(int dim, std::size_t n, Direction dir) : size_(1) {
    std::vector<int> dims(dim, static_cast<int>(n));
    for (int i = 0; i < dim; ++i) size_ *= n;
    std::vector<std::complex<double>> a(size_), b(size_);
    plan_ = fftw_plan_dft(dim, dims.data(), reinterpret_cast<fftw_complex*>(a.data()),
                          reinterpret_cast<fftw_complex*>(b.data()), static_cast<int>(dir),
                          FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan_) throw NumericalError("FFTW plan creation failed");
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() { fftw_destroy_plan(plan_); }

  std::size_t size() const { return size_; }

  // Out-of-place or in-place; fftw_execute_dft is re-entrant for distinct buffers.
  void execute(std::span<const Complex> in, std::span<Complex> out) const {
    require(in.size() == size_ && out.size() == size_, "FFT buffer size mismatch");
    fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }

 private:
  fftw_plan plan_ = nullptr;
  std::size_t size_;
};

/// Process-wide plan cache keyed by (dim, n, direction).
inline const FftPlan& fft_plan(int dim, std::size_t n, FftPlan::Direction dir) {
  static std::mutex mutex;
  static std::map<std::tuple<int, std::size_t, int>, std::unique_ptr<FftPlan>> cache;
  std::lock_guard lock(mutex);
  auto key = std::make_tuple(dim, n, static_cast<int>(dir));
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_unique<FftPlan>(dim, n, dir)).first;
  return *it->second;
}

}  // namespace roughfio
