#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "roughfio/fft.hpp"
#include "roughfio/grid.hpp"

namespace roughfio {

/**
 * Discrete L^r Hardy-Littlewood maximal function.
 *
 * Ball family: the singleton {x}, plus lattice balls B(c, rho) with rho on a
 * geometric ladder h 2^{k/8} up to L/2 and centers c on the stride-2 lattice
 * taken from the stencil c = x + t rho d (t in {0, 1/2, 1}, d an axis or
 * diagonal direction). Only balls that actually contain x count. Averages are
 * lattice averages of |f|^r, computed for every center by FFT convolution.
 */
template <int Dim>
class MaximalFunction {
 public:
  static constexpr int kStepsPerOctave = 8;

  MaximalFunction(const SampledFunction<Dim>& f, double r) : grid_(f.grid), r_(r) {
    require(r >= 1.0 && std::isfinite(r), "maximal function needs r in [1, infinity)");
    powered_.resize(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) powered_[k] = power(std::abs(f[k]));
    const double h = grid_.spacing();
    for (int k = 0;; ++k) {
      const double rad = h * std::exp2(static_cast<double>(k) / kStepsPerOctave);
      if (rad > grid_.period() / 2.0 * (1.0 + 1e-12)) break;
      radii_.push_back(rad);
    }
    directions_ = stencil_directions();
  }

  const std::vector<double>& radii() const { return radii_; }
  double exponent() const { return r_; }

  /// M_r f at the given flat lattice indices.
  std::vector<double> at(const std::vector<std::size_t>& points) const {
    std::vector<double> best(points.size());
    for (std::size_t p = 0; p < points.size(); ++p) best[p] = powered_[points[p]];
    const auto& fwd = fft_plan(Dim, grid_.samples_per_axis(), FftPlan::Direction::forward);
    const auto& bwd = fft_plan(Dim, grid_.samples_per_axis(), FftPlan::Direction::backward);
    std::vector<Complex> fhat(grid_.size()), ball(grid_.size()), bhat(grid_.size()), conv(grid_.size());
    {
      std::vector<Complex> in(powered_.begin(), powered_.end());
      fwd.execute(in, fhat);
    }
    std::vector<double> offset_norm(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) offset_norm[k] = norm<Dim>(grid_.centered_offset(k));
    const double scale = 1.0 / static_cast<double>(grid_.size());
    const double h = grid_.spacing();
    for (double rad : radii_) {
      std::size_t count = 0;
      for (std::size_t k = 0; k < grid_.size(); ++k) {
        const bool in = offset_norm[k] <= rad * (1.0 + 1e-12);
        ball[k] = in ? 1.0 : 0.0;
        count += in;
      }
      fwd.execute(ball, bhat);
      for (std::size_t k = 0; k < grid_.size(); ++k) bhat[k] *= fhat[k];
      bwd.execute(bhat, conv);
      const double norm_factor = scale / static_cast<double>(count);
      for (std::size_t p = 0; p < points.size(); ++p) {
        const Index<Dim> x = grid_.unflatten(points[p]);
        for (double t : {0.0, 0.5, 1.0})
          for (const auto& d : directions_) {
            if (t == 0.0 && &d != &directions_.front()) continue;
            Index<Dim> c{};
            Vec<Dim> gap{};
            for (int i = 0; i < Dim; ++i) {
              const double target = static_cast<double>(x[i]) + t * rad * d[i] / h;
              c[i] = 2 * static_cast<std::int64_t>(std::llround(target / 2.0));
              gap[i] = static_cast<double>(c[i] - x[i]) * h;
            }
            if (norm<Dim>(gap) > rad * (1.0 + 1e-12)) continue;
            const double avg = std::max(0.0, conv[grid_.flatten(c)].real() * norm_factor);
            best[p] = std::max(best[p], avg);
          }
      }
    }
    for (auto& v : best) v = root(v);
    return best;
  }

  /// M_r f on the whole lattice.
  SampledFunction<Dim> all() const {
    std::vector<std::size_t> pts(grid_.size());
    for (std::size_t k = 0; k < pts.size(); ++k) pts[k] = k;
    const auto v = at(pts);
    SampledFunction<Dim> out(grid_);
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = v[k];
    return out;
  }

 private:
  double power(double v) const {
    if (r_ == 1.0) return v;
    if (r_ == 2.0) return v * v;
    return std::pow(v, r_);
  }
  double root(double v) const {
    if (r_ == 1.0) return v;
    if (r_ == 2.0) return std::sqrt(v);
    return std::pow(v, 1.0 / r_);
  }

  static std::vector<Vec<Dim>> stencil_directions() {
    std::vector<Vec<Dim>> out;
    for (int i = 0; i < Dim; ++i)
      for (double s : {1.0, -1.0}) {
        Vec<Dim> d{};
        d[i] = s;
        out.push_back(d);
      }
    if constexpr (Dim >= 2) {
      for (unsigned mask = 0; mask < (1u << Dim); ++mask) {
        Vec<Dim> d{};
        for (int i = 0; i < Dim; ++i) d[i] = ((mask >> i) & 1u) ? -1.0 : 1.0;
        out.push_back((1.0 / std::sqrt(static_cast<double>(Dim))) * d);
      }
    }
    return out;
  }

  Grid<Dim> grid_;
  double r_;
  std::vector<double> powered_;
  std::vector<double> radii_;
  std::vector<Vec<Dim>> directions_;
};

template <int Dim>
SampledFunction<Dim> maximal(const SampledFunction<Dim>& f, double r) {
  return MaximalFunction<Dim>(f, r).all();
}

template <int Dim>
std::vector<double> maximal_at(const SampledFunction<Dim>& f, double r, const std::vector<std::size_t>& points) {
  return MaximalFunction<Dim>(f, r).at(points);
}

}  // namespace roughfio
