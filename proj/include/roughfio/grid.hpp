#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <vector>

#include "roughfio/fft.hpp"
#include "roughfio/vec.hpp"

namespace roughfio {

/**
 * Periodic sampling lattice on the torus [0, L)^Dim with N samples per axis.
 *
 * Spatial points are x_k = k L / N. The dual frequency lattice has spacing
 * 2 pi / L and covers [-pi N / L, pi N / L) per axis; flat indices follow the
 * usual FFT ordering (index k < N/2 is wavenumber k, otherwise k - N).
 */
template <int Dim>
class Grid {
  static_assert(Dim >= 1 && Dim <= 3, "dimension must be 1, 2 or 3");

 public:
  Grid(std::size_t samples_per_axis, double period) : n_(samples_per_axis), period_(period) {
    require(is_power_of_two(n_), "samples per axis must be a power of two, got " + std::to_string(n_));
    require(n_ >= 8 && n_ <= 4096, "samples per axis must lie in [8, 4096]");
    require(std::isfinite(period_) && period_ > 0.0, "period must be positive");
    size_ = 1;
    for (int i = 0; i < Dim; ++i) size_ *= n_;
  }

  static constexpr int dim() { return Dim; }
  std::size_t samples_per_axis() const { return n_; }
  double period() const { return period_; }
  std::size_t size() const { return size_; }
  double spacing() const { return period_ / static_cast<double>(n_); }
  double frequency_spacing() const { return 2.0 * kPi / period_; }
  double nyquist() const { return kPi * static_cast<double>(n_) / period_; }
  double cell_volume() const { return std::pow(spacing(), Dim); }
  double frequency_cell_volume() const { return std::pow(frequency_spacing(), Dim); }

  Index<Dim> unflatten(std::size_t flat) const {
    Index<Dim> idx{};
    for (int i = Dim - 1; i >= 0; --i) {
      idx[i] = static_cast<std::int64_t>(flat % n_);
      flat /= n_;
    }
    return idx;
  }

  // Wraps each component periodically.
  std::size_t flatten(const Index<Dim>& idx) const {
    std::size_t flat = 0;
    const auto n = static_cast<std::int64_t>(n_);
    for (int i = 0; i < Dim; ++i) flat = flat * n_ + static_cast<std::size_t>(((idx[i] % n) + n) % n);
    return flat;
  }

  Vec<Dim> point(const Index<Dim>& idx) const {
    Vec<Dim> x{};
    for (int i = 0; i < Dim; ++i) x[i] = static_cast<double>(idx[i]) * spacing();
    return x;
  }
  Vec<Dim> point(std::size_t flat) const { return point(unflatten(flat)); }

  // Signed wavenumber index in [-N/2, N/2).
  std::int64_t signed_index(std::int64_t k) const {
    const auto n = static_cast<std::int64_t>(n_);
    k = ((k % n) + n) % n;
    return k < n / 2 ? k : k - n;
  }

  Index<Dim> wavenumber(std::size_t flat) const {
    Index<Dim> idx = unflatten(flat);
    for (auto& k : idx) k = signed_index(k);
    return idx;
  }

  Vec<Dim> frequency(std::size_t flat) const {
    const Index<Dim> m = wavenumber(flat);
    Vec<Dim> xi{};
    for (int i = 0; i < Dim; ++i) xi[i] = static_cast<double>(m[i]) * frequency_spacing();
    return xi;
  }

  // Displacement of lattice index offset k in centered form, z in [-L/2, L/2)^Dim.
  Vec<Dim> centered_offset(std::size_t flat) const {
    const Index<Dim> m = wavenumber(flat);
    Vec<Dim> z{};
    for (int i = 0; i < Dim; ++i) z[i] = static_cast<double>(m[i]) * spacing();
    return z;
  }

  bool operator==(const Grid& other) const { return n_ == other.n_ && period_ == other.period_; }

 private:
  std::size_t n_;
  double period_;
  std::size_t size_;
};

template <int Dim>
Grid<Dim> make_grid(std::size_t samples_per_axis, double period) {
  return Grid<Dim>(samples_per_axis, period);
}

/// Checks the runtime arguments of make_grid without building anything.
inline void validate_grid_arguments(int dim, std::size_t samples_per_axis, double period) {
  require(dim >= 1 && dim <= 3, "dimension must be 1, 2 or 3, got " + std::to_string(dim));
  require(is_power_of_two(samples_per_axis), "samples per axis must be a power of two");
  require(samples_per_axis >= 8 && samples_per_axis <= 4096, "samples per axis must lie in [8, 4096]");
  require(std::isfinite(period) && period > 0.0, "period must be positive");
}

enum class Domain { spatial, frequency };

/// Complex samples on a Grid, either spatial values or unitary DFT coefficients.
template <int Dim>
struct SampledFunction {
  Grid<Dim> grid;
  std::vector<Complex> values;
  Domain domain = Domain::spatial;

  explicit SampledFunction(const Grid<Dim>& g, Domain d = Domain::spatial)
      : grid(g), values(g.size(), Complex{0.0, 0.0}), domain(d) {}

  SampledFunction(const Grid<Dim>& g, std::vector<Complex> v, Domain d = Domain::spatial)
      : grid(g), values(std::move(v)), domain(d) {
    require(values.size() == grid.size(), "value count must equal N^dim");
  }

  template <class Fn>
  static SampledFunction from_callable(const Grid<Dim>& g, Fn&& fn) {
    SampledFunction f(g);
    for (std::size_t k = 0; k < g.size(); ++k) f.values[k] = Complex(fn(g.point(k)));
    return f;
  }

  std::size_t size() const { return values.size(); }
  Complex& operator[](std::size_t k) { return values[k]; }
  const Complex& operator[](std::size_t k) const { return values[k]; }

  // Discrete (unweighted) l2 norm of the samples.
  double l2_norm() const {
    double s = 0.0;
    for (const auto& v : values) s += std::norm(v);
    return std::sqrt(s);
  }

  double sup_norm() const {
    double s = 0.0;
    for (const auto& v : values) s = std::max(s, std::abs(v));
    return s;
  }

  SampledFunction scaled(Complex s) const {
    SampledFunction out = *this;
    for (auto& v : out.values) v *= s;
    return out;
  }

  bool all_finite() const {
    return std::all_of(values.begin(), values.end(),
                       [](const Complex& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
  }
};

namespace detail {

template <int Dim>
SampledFunction<Dim> unitary_transform(const SampledFunction<Dim>& f, FftPlan::Direction dir, Domain result) {
  require(f.all_finite(), "transform input contains non-finite values");
  SampledFunction<Dim> out(f.grid, result);
  fft_plan(Dim, f.grid.samples_per_axis(), dir).execute(f.values, out.values);
  const double scale = 1.0 / std::sqrt(static_cast<double>(f.grid.size()));
  for (auto& v : out.values) v *= scale;
  return out;
}

}  // namespace detail

/// Unitary DFT: F(m) = N^{-Dim/2} sum_k f(x_k) exp(-2 pi i k.m / N).
template <int Dim>
SampledFunction<Dim> forward_transform(const SampledFunction<Dim>& f) {
  return detail::unitary_transform(f, FftPlan::Direction::forward, Domain::frequency);
}

template <int Dim>
SampledFunction<Dim> inverse_transform(const SampledFunction<Dim>& f) {
  return detail::unitary_transform(f, FftPlan::Direction::backward, Domain::spatial);
}

/// Samples of the continuous Fourier transform \hat f(xi) = int f(x) e^{-i x.xi} dx
/// at the lattice frequencies (exact for band-limited periodic f).
template <int Dim>
std::vector<Complex> continuous_spectrum(const SampledFunction<Dim>& f) {
  require(f.domain == Domain::spatial, "continuous_spectrum expects spatial samples");
  std::vector<Complex> out(f.size());
  require(f.all_finite(), "transform input contains non-finite values");
  fft_plan(Dim, f.grid.samples_per_axis(), FftPlan::Direction::forward).execute(f.values, out);
  const double w = f.grid.cell_volume();
  for (auto& v : out) v *= w;
  return out;
}

/**
 * Dyadic cube of the fundamental cell: side L 2^{-level}, occupying
 * [corner * side, (corner + 1) * side) per axis.
 */
template <int Dim>
struct DyadicCube {
  int level = 0;
  Index<Dim> corner{};

  double side(double period) const { return std::ldexp(period, -level); }

  bool valid() const {
    if (level < 0 || level > 62) return false;
    const std::int64_t count = std::int64_t{1} << level;
    return std::all_of(corner.begin(), corner.end(), [&](std::int64_t c) { return c >= 0 && c < count; });
  }

  DyadicCube parent() const {
    require(level > 0, "the root cube has no parent");
    DyadicCube p{level - 1, corner};
    for (auto& c : p.corner) c >>= 1;
    return p;
  }

  std::vector<DyadicCube> children() const {
    std::vector<DyadicCube> out;
    out.reserve(std::size_t{1} << Dim);
    for (unsigned mask = 0; mask < (1u << Dim); ++mask) {
      DyadicCube c{level + 1, corner};
      for (int i = 0; i < Dim; ++i) c.corner[i] = 2 * corner[i] + ((mask >> i) & 1u);
      out.push_back(c);
    }
    return out;
  }

  bool contains(const DyadicCube& other) const {
    if (other.level < level) return false;
    const int shift = other.level - level;
    for (int i = 0; i < Dim; ++i)
      if ((other.corner[i] >> shift) != corner[i]) return false;
    return true;
  }

  // Half-open lattice index range [lo, hi) covered along axis i.
  std::pair<std::int64_t, std::int64_t> index_range(int axis, std::size_t n) const {
    const auto nn = static_cast<std::int64_t>(n);
    const auto lo = (corner[axis] * nn + (std::int64_t{1} << level) - 1) >> level;
    const auto hi = ((corner[axis] + 1) * nn + (std::int64_t{1} << level) - 1) >> level;
    return {lo, hi};
  }

  std::size_t lattice_count(std::size_t n) const {
    std::size_t c = 1;
    for (int i = 0; i < Dim; ++i) {
      auto [lo, hi] = index_range(i, n);
      c *= static_cast<std::size_t>(std::max<std::int64_t>(0, hi - lo));
    }
    return c;
  }

  bool contains_index(const Index<Dim>& idx, std::size_t n) const {
    for (int i = 0; i < Dim; ++i) {
      auto [lo, hi] = index_range(i, n);
      if (idx[i] < lo || idx[i] >= hi) return false;
    }
    return true;
  }

  // Flat lattice indices inside the cube.
  std::vector<std::size_t> lattice_points(const Grid<Dim>& grid) const {
    std::vector<std::size_t> out;
    out.reserve(lattice_count(grid.samples_per_axis()));
    Index<Dim> lo{}, hi{};
    for (int i = 0; i < Dim; ++i) std::tie(lo[i], hi[i]) = index_range(i, grid.samples_per_axis());
    for (int i = 0; i < Dim; ++i)
      if (hi[i] <= lo[i]) return out;
    Index<Dim> idx = lo;
    while (true) {
      out.push_back(grid.flatten(idx));
      int axis = Dim - 1;
      while (axis >= 0 && ++idx[axis] == hi[axis]) {
        idx[axis] = lo[axis];
        --axis;
      }
      if (axis < 0) break;
    }
    return out;
  }

  Vec<Dim> center(double period) const {
    Vec<Dim> c{};
    const double s = side(period);
    for (int i = 0; i < Dim; ++i) c[i] = (static_cast<double>(corner[i]) + 0.5) * s;
    return c;
  }

  bool operator==(const DyadicCube&) const = default;
  auto operator<=>(const DyadicCube&) const = default;
};

/// Discrete L^r average <f>_{r,Q}; r = +infinity gives the sup over the cube.
template <int Dim>
double cube_average(const SampledFunction<Dim>& f, double r, const DyadicCube<Dim>& q) {
  require(r >= 1.0, "cube_average needs r >= 1");
  const auto points = q.lattice_points(f.grid);
  if (points.empty()) throw DomainError("cube contains no lattice point");
  if (std::isinf(r)) {
    double s = 0.0;
    for (auto k : points) s = std::max(s, std::abs(f[k]));
    return s;
  }
  double s = 0.0;
  for (auto k : points) s += std::pow(std::abs(f[k]), r);
  return std::pow(s / static_cast<double>(points.size()), 1.0 / r);
}

// ---------------------------------------------------------------------------
// Serialization. Binary layout (little-endian):
//   uint32 dim | uint32 N | float64 L | N^dim x (float64 re, float64 im)

namespace detail {

template <class T>
void write_le(std::ostream& os, T value) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw DomainError("truncated sampled-function stream");
  return value;
}

}  // namespace detail

template <int Dim>
void write_binary(const SampledFunction<Dim>& f, std::ostream& os) {
  detail::write_le<std::uint32_t>(os, Dim);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.samples_per_axis()));
  detail::write_le<double>(os, f.grid.period());
  for (const auto& v : f.values) {
    detail::write_le<double>(os, v.real());
    detail::write_le<double>(os, v.imag());
  }
}

template <int Dim>
SampledFunction<Dim> read_binary(std::istream& is) {
  const auto dim = detail::read_le<std::uint32_t>(is);
  if (dim != static_cast<std::uint32_t>(Dim))
    throw DomainError("stream holds a " + std::to_string(dim) + "-dimensional function");
  const auto n = detail::read_le<std::uint32_t>(is);
  const auto period = detail::read_le<double>(is);
  SampledFunction<Dim> f(Grid<Dim>(n, period));
  for (auto& v : f.values) {
    const double re = detail::read_le<double>(is);
    const double im = detail::read_le<double>(is);
    v = Complex(re, im);
  }
  return f;
}

// CSV rows: i0[,i1[,i2]],re,im
template <int Dim>
void write_csv(const SampledFunction<Dim>& f, std::ostream& os) {
  static const char* names[] = {"i0", "i1", "i2"};
  for (int i = 0; i < Dim; ++i) os << names[i] << ',';
  os << "re,im\n";
  os.precision(17);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const auto idx = f.grid.unflatten(k);
    for (int i = 0; i < Dim; ++i) os << idx[i] << ',';
    os << f[k].real() << ',' << f[k].imag() << '\n';
  }
}

}  // namespace roughfio
