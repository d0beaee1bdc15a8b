#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "roughfio/grid.hpp"

namespace roughfio {

/// Smooth transition: 0 for u <= 0, 1 for u >= 1, C-infinity in between
/// (the exp(-1/t) bridge).
inline double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

/**
 * Seeded piecewise-constant function on the torus [0, L)^Dim with
 * `pieces` cells per axis; values uniform in [lo, hi]. Used as the rough
 * x-dependence of archetype phases and amplitudes.
 */
template <int Dim>
class PiecewiseConstant {
 public:
  PiecewiseConstant(double period, int pieces, double lo, double hi, std::uint64_t seed)
      : period_(period), pieces_(pieces) {
    require(pieces > 0, "piece count must be positive");
    require(period > 0.0, "period must be positive");
    std::size_t count = 1;
    for (int i = 0; i < Dim; ++i) count *= static_cast<std::size_t>(pieces);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    values_.resize(count);
    for (auto& v : values_) v = dist(rng);
  }

  PiecewiseConstant(double period, int pieces, std::vector<double> values)
      : period_(period), pieces_(pieces), values_(std::move(values)) {
    std::size_t count = 1;
    for (int i = 0; i < Dim; ++i) count *= static_cast<std::size_t>(pieces);
    require(values_.size() == count, "piece value count mismatch");
  }

  std::uint64_t label(const Vec<Dim>& x) const {
    std::uint64_t flat = 0;
    for (int i = 0; i < Dim; ++i) {
      double u = std::fmod(x[i] / period_, 1.0);
      if (u < 0.0) u += 1.0;
      auto k = static_cast<std::int64_t>(std::floor(u * pieces_));
      k = std::min<std::int64_t>(std::max<std::int64_t>(k, 0), pieces_ - 1);
      flat = flat * static_cast<std::uint64_t>(pieces_) + static_cast<std::uint64_t>(k);
    }
    return flat;
  }

  double operator()(const Vec<Dim>& x) const { return values_[label(x)]; }

  const std::vector<double>& values() const { return values_; }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

 private:
  double period_;
  int pieces_;
  std::vector<double> values_;
};

/**
 * Seeded band-limited random function: independent complex Gaussian
 * coefficients on the frequency lattice inside |xi| <= band (the Nyquist
 * rows excluded), normalized to sup |f| = 1.
 */
template <int Dim>
SampledFunction<Dim> random_band_limited(const Grid<Dim>& grid, double band, std::uint64_t seed) {
  require(band > 0.0, "band must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SampledFunction<Dim> spec(grid, Domain::frequency);
  const auto half = static_cast<std::int64_t>(grid.samples_per_axis() / 2);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    const auto m = grid.wavenumber(k);
    bool nyquist_row = false;
    for (auto mi : m) nyquist_row = nyquist_row || mi == -half;
    if (nyquist_row || norm<Dim>(grid.frequency(k)) > band) continue;
    spec[k] = Complex(re, im);
  }
  auto f = inverse_transform(spec);
  const double s = f.sup_norm();
  if (s > 0.0)
    for (auto& v : f.values) v /= s;
  return f;
}

/// Mollified indicator of the periodic ball B(center, radius) with edge width `width`.
template <int Dim>
SampledFunction<Dim> smooth_indicator(const Grid<Dim>& grid, const Vec<Dim>& center, double radius,
                                      double width) {
  require(radius > 0.0 && width > 0.0, "radius and width must be positive");
  const double period = grid.period();
  return SampledFunction<Dim>::from_callable(grid, [&](const Vec<Dim>& x) {
    Vec<Dim> d{};
    for (int i = 0; i < Dim; ++i) {
      d[i] = std::remainder(x[i] - center[i], period);
    }
    return smooth_step((radius - norm<Dim>(d)) / width + 0.5);
  });
}

}  // namespace roughfio
