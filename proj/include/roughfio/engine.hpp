#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "roughfio/decomposition.hpp"
#include "roughfio/fft.hpp"
#include "roughfio/grid.hpp"
#include "roughfio/sparse.hpp"
#include "roughfio/symbols.hpp"

namespace roughfio {

/// Refuse kernel slices above this many bytes.
inline constexpr std::size_t kMaxSliceBytes = std::size_t{2} << 30;

/**
 * T f(x) = (2 pi)^-n sum over the frequency lattice of a(x, xi) e^{i phi(x, xi)} \hat f(xi) dxi.
 *
 * The split radius R = 1 + 2 sup |grad_xi theta| is estimated at
 * construction over seeded lattice x-probes and |xi| = 1, inflated by 5%.
 */
template <int Dim>
class FioOperator {
 public:
  FioOperator(Amplitude<Dim> a, Phase<Dim> phi, Grid<Dim> grid, std::size_t gradient_probes = 1000,
              std::uint64_t seed = 1)
      : a_(std::move(a)), phi_(std::move(phi)), grid_(grid) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, grid_.size() - 1);
    const auto dirs = sphere_directions<Dim>(64);
    double sup = 0.0;
    for (std::size_t p = 0; p < gradient_probes; ++p) {
      const Vec<Dim> x = grid_.point(pick(rng));
      for (const auto& w : dirs) sup = std::max(sup, norm<Dim>(phi_.grad_theta(x, w)));
    }
    gradient_sup_ = 1.05 * sup;
    split_radius_ = 1.0 + 2.0 * gradient_sup_;
  }

  const Amplitude<Dim>& amplitude() const { return a_; }
  const Phase<Dim>& phase() const { return phi_; }
  const Grid<Dim>& grid() const { return grid_; }
  double gradient_sup() const { return gradient_sup_; }
  double split_radius() const { return split_radius_; }

  // a(x, xi) e^{i theta(x, xi)}, with a check for non-finite values.
  Complex symbol(const Vec<Dim>& x, const Vec<Dim>& xi) const {
    const Complex av = a_(x, xi);
    const double th = phi_.theta(x, xi);
    if (!std::isfinite(av.real()) || !std::isfinite(av.imag()) || !std::isfinite(th))
      throw NumericalError("non-finite amplitude or phase at x=" + to_string<Dim>(x) + " xi=" + to_string<Dim>(xi));
    return av * std::polar(1.0, th);
  }

 private:
  Amplitude<Dim> a_;
  Phase<Dim> phi_;
  Grid<Dim> grid_;
  double gradient_sup_ = 0.0;
  double split_radius_ = 1.0;
};

/// Lattice frequencies carrying a non-zero multiplier weight.
template <int Dim>
struct FrequencySupport {
  std::vector<std::size_t> index;
  std::vector<Vec<Dim>> xi;
  std::vector<double> weight;
};

template <int Dim>
FrequencySupport<Dim> frequency_support(const Grid<Dim>& grid, const std::function<double(const Vec<Dim>&)>& weight) {
  FrequencySupport<Dim> s;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec<Dim> xi = grid.frequency(k);
    const double w = weight ? weight(xi) : 1.0;
    if (w == 0.0) continue;
    s.index.push_back(k);
    s.xi.push_back(xi);
    s.weight.push_back(w);
  }
  return s;
}

template <int Dim>
FrequencySupport<Dim> lp_support(const Grid<Dim>& grid, const LPPartition& part, int j) {
  return frequency_support<Dim>(grid, [&](const Vec<Dim>& xi) { return part.psi<Dim>(j, xi); });
}

/// Flat index of a lattice point; throws if x is not on the lattice.
template <int Dim>
std::size_t lattice_flat(const Grid<Dim>& grid, const Vec<Dim>& x) {
  Index<Dim> idx{};
  for (int i = 0; i < Dim; ++i) {
    const double u = x[i] / grid.spacing();
    idx[i] = static_cast<std::int64_t>(std::llround(u));
    if (std::abs(u - static_cast<double>(idx[i])) > 1e-9)
      throw DomainError("probe " + to_string<Dim>(x) + " is not a lattice point");
  }
  return grid.flatten(idx);
}

namespace detail {

template <int Dim>
void check_below_nyquist(const Grid<Dim>& grid, int j) {
  require(j >= 0, "dyadic index must be non-negative");
  if (std::ldexp(1.0, j + 1) > grid.nyquist())
    throw DomainError("dyadic piece j=" + std::to_string(j) + " exceeds the grid Nyquist frequency " +
                      std::to_string(grid.nyquist()));
}

// (2 pi)^-n sum_xi w(xi) a e^{i phi} fhat(xi) dxi at one point.
template <int Dim>
Complex direct_sum(const FioOperator<Dim>& op, const std::vector<Complex>& spectrum, const FrequencySupport<Dim>& s,
                   const Vec<Dim>& x) {
  Complex acc{0.0, 0.0};
  for (std::size_t q = 0; q < s.index.size(); ++q) {
    const Complex fh = spectrum[s.index[q]];
    if (fh == Complex{0.0, 0.0}) continue;
    acc += s.weight[q] * op.symbol(x, s.xi[q]) * std::polar(1.0, dot<Dim>(x, s.xi[q])) * fh;
  }
  return acc / std::pow(op.grid().period(), Dim);
}

template <int Dim>
std::vector<Complex> direct_sums(const FioOperator<Dim>& op, const SampledFunction<Dim>& f,
                                 const FrequencySupport<Dim>& s, const std::vector<Vec<Dim>>& x_probes) {
  require(f.grid == op.grid(), "function and operator live on different grids");
  const auto spectrum = continuous_spectrum(f);
  // Drop frequencies where \hat f vanishes.
  FrequencySupport<Dim> live;
  for (std::size_t q = 0; q < s.index.size(); ++q)
    if (spectrum[s.index[q]] != Complex{0.0, 0.0}) {
      live.index.push_back(s.index[q]);
      live.xi.push_back(s.xi[q]);
      live.weight.push_back(s.weight[q]);
    }
  std::vector<Complex> out;
  out.reserve(x_probes.size());
  for (const auto& x : x_probes) out.push_back(direct_sum(op, spectrum, live, x));
  return out;
}

}  // namespace detail

/// T f at arbitrary probe points by direct summation.
template <int Dim>
std::vector<Complex> apply_fio(const FioOperator<Dim>& op, const SampledFunction<Dim>& f,
                               const std::vector<Vec<Dim>>& x_probes) {
  return detail::direct_sums(op, f, frequency_support<Dim>(op.grid(), {}), x_probes);
}

/// T_j f: the multiplier psi_j inserted.
template <int Dim>
std::vector<Complex> apply_Tj(const FioOperator<Dim>& op, const LPPartition& part, int j,
                              const SampledFunction<Dim>& f, const std::vector<Vec<Dim>>& x_probes) {
  detail::check_below_nyquist(op.grid(), j);
  return detail::direct_sums(op, f, lp_support(op.grid(), part, j), x_probes);
}

/**
 * T f on the whole lattice. When both symbols carry x-labels, every label
 * class costs one inverse FFT (exact); otherwise falls back to direct
 * summation at every lattice point.
 */
template <int Dim>
SampledFunction<Dim> apply_fio_lattice(const FioOperator<Dim>& op, const SampledFunction<Dim>& f,
                                       const std::function<double(const Vec<Dim>&)>& weight = {}) {
  const auto& grid = op.grid();
  require(f.grid == grid, "function and operator live on different grids");
  SampledFunction<Dim> out(grid);
  const auto s = frequency_support<Dim>(grid, weight);
  const auto& alabel = op.amplitude().x_label;
  const auto& plabel = op.phase().x_label;
  if (!alabel || !plabel) {
    std::vector<Vec<Dim>> pts(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) pts[k] = grid.point(k);
    out.values = detail::direct_sums(op, f, s, pts);
    return out;
  }
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::vector<std::size_t>> classes;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec<Dim> x = grid.point(k);
    classes[{alabel(x), plabel(x)}].push_back(k);
  }
  const auto spectrum = continuous_spectrum(f);
  const auto& plan = fft_plan(Dim, grid.samples_per_axis(), FftPlan::Direction::backward);
  std::vector<Complex> h(grid.size()), g(grid.size());
  const double norm_factor = 1.0 / std::pow(grid.period(), Dim);
  for (const auto& [label, members] : classes) {
    const Vec<Dim> x = grid.point(members.front());
    std::fill(h.begin(), h.end(), Complex{0.0, 0.0});
    for (std::size_t q = 0; q < s.index.size(); ++q) {
      const Complex fh = spectrum[s.index[q]];
      if (fh == Complex{0.0, 0.0}) continue;
      h[s.index[q]] = s.weight[q] * op.symbol(x, s.xi[q]) * fh;
    }
    plan.execute(h, g);
    for (auto k : members) out[k] = g[k] * norm_factor;
  }
  return out;
}

/// Kernel samples K(x, z) for z on the spatial lattice (index = flat offset).
template <int Dim>
struct KernelSlice {
  Grid<Dim> grid;
  int j = -1;
  long nu = -1;
  int ell = -1;
  std::vector<Vec<Dim>> x;
  std::vector<std::vector<Complex>> values;
};

namespace detail {

template <int Dim>
void check_slice_budget(const Grid<Dim>& grid, std::size_t probes) {
  if (probes * grid.size() * sizeof(Complex) > kMaxSliceBytes)
    throw DomainError("kernel slice would exceed the 2 GiB memory budget");
}

// K(x, z_k) = L^-n sum_xi w(xi) a(x, xi) e^{i theta(x, xi) + i z.xi}: one inverse FFT.
template <int Dim>
void kernel_at(const FioOperator<Dim>& op, const FrequencySupport<Dim>& s, const Vec<Dim>& x,
               std::vector<Complex>& h, std::vector<Complex>& out) {
  const auto& grid = op.grid();
  h.assign(grid.size(), Complex{0.0, 0.0});
  out.resize(grid.size());
  for (std::size_t q = 0; q < s.index.size(); ++q) h[s.index[q]] = s.weight[q] * op.symbol(x, s.xi[q]);
  fft_plan(Dim, grid.samples_per_axis(), FftPlan::Direction::backward).execute(h, out);
  const double factor = 1.0 / std::pow(grid.period(), Dim);
  for (auto& v : out) v *= factor;
}

}  // namespace detail

/// Streams K_j(x, .) for each probe to `fn(probe_index, kernel)` without storing slices.
template <int Dim, class Fn>
void for_each_kernel(const FioOperator<Dim>& op, const LPPartition& part, int j,
                     const std::vector<Vec<Dim>>& x_probes, Fn&& fn) {
  detail::check_below_nyquist(op.grid(), j);
  const auto s = lp_support(op.grid(), part, j);
  std::vector<Complex> h, k;
  for (std::size_t p = 0; p < x_probes.size(); ++p) {
    detail::kernel_at(op, s, x_probes[p], h, k);
    fn(p, std::span<const Complex>(k));
  }
}

template <int Dim>
KernelSlice<Dim> kernel_Kj(const FioOperator<Dim>& op, const LPPartition& part, int j,
                           const std::vector<Vec<Dim>>& x_probes) {
  detail::check_slice_budget(op.grid(), x_probes.size());
  KernelSlice<Dim> slice{op.grid(), -1, -1, -1, {}, {}};
  slice.j = j;
  slice.x = x_probes;
  for_each_kernel(op, part, j, x_probes, [&](std::size_t, std::span<const Complex> k) {
    slice.values.emplace_back(k.begin(), k.end());
  });
  return slice;
}

/// K_0^ell(x, z) = K_0(x, z) psi_ell(z).
template <int Dim>
KernelSlice<Dim> kernel_K0_ell(const FioOperator<Dim>& op, const LPPartition& part, int ell,
                               const std::vector<Vec<Dim>>& x_probes) {
  const auto& grid = op.grid();
  require(ell >= 0, "ell must be non-negative");
  if (std::ldexp(1.0, ell + 2) > grid.period() / 2.0)
    throw DomainError("ell=" + std::to_string(ell) + " is too large for the period cell");
  auto slice = kernel_Kj(op, part, 0, x_probes);
  slice.j = 0;
  slice.ell = ell;
  std::vector<double> cut(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) cut[k] = part.psi<Dim>(ell, grid.centered_offset(k));
  for (auto& row : slice.values)
    for (std::size_t k = 0; k < row.size(); ++k) row[k] *= cut[k];
  return slice;
}

/**
 * K_j^nu(x, z) = 2^{j n rho} (2 pi)^-n int e^{i 2^{j rho}(grad theta(x, xi^nu) + z).xi} b_j^nu(x, xi) dxi,
 * evaluated on the frequency lattice scaled by 2^{-j rho}.
 */
template <int Dim>
KernelSlice<Dim> kernel_Kj_nu(const FioOperator<Dim>& op, const LPPartition& part, const AngularNet<Dim>& net,
                              int j, std::size_t nu, const std::vector<Vec<Dim>>& x_probes) {
  const auto& grid = op.grid();
  detail::check_below_nyquist(grid, j);
  detail::check_slice_budget(grid, x_probes.size());
  const auto b = b_symbol(op.amplitude(), op.phase(), part, net, j, nu);
  const double up = std::exp2(j * net.type);
  const auto s = lp_support(grid, part, j);
  const auto& plan = fft_plan(Dim, grid.samples_per_axis(), FftPlan::Direction::backward);
  KernelSlice<Dim> slice{grid, -1, -1, -1, {}, {}};
  slice.j = j;
  slice.nu = static_cast<long>(nu);
  slice.x = x_probes;
  std::vector<Complex> h(grid.size());
  const double factor = 1.0 / std::pow(grid.period(), Dim);
  for (const auto& x : x_probes) {
    const Vec<Dim> g = op.phase().grad_theta(x, net.directions[nu]);
    std::fill(h.begin(), h.end(), Complex{0.0, 0.0});
    for (std::size_t q = 0; q < s.index.size(); ++q) {
      const Vec<Dim>& eta_xi = s.xi[q];
      const Complex bv = b(x, (1.0 / up) * eta_xi);
      if (bv == Complex{0.0, 0.0}) continue;
      h[s.index[q]] = std::polar(1.0, dot<Dim>(g, eta_xi)) * bv;
    }
    std::vector<Complex> row(grid.size());
    plan.execute(h, row);
    for (auto& v : row) v *= factor;
    slice.values.push_back(std::move(row));
  }
  return slice;
}

/**
 * Concentration of K_j^nu: sup over probes and z of g^nu_j(w)^N |K_j^nu(x, z)|
 * with w = grad theta(x, xi^nu) + z (first) or with only the transverse
 * gradient components added (second).
 */
template <int Dim>
std::pair<double, double> kernel_concentration(const FioOperator<Dim>& op, const LPPartition& part,
                                               const AngularNet<Dim>& net, int j, std::size_t nu,
                                               const std::vector<Vec<Dim>>& x_probes, int power) {
  const auto slice = kernel_Kj_nu(op, part, net, j, nu, x_probes);
  const auto& grid = op.grid();
  double full = 0.0, transverse = 0.0;
  for (std::size_t p = 0; p < x_probes.size(); ++p) {
    const Vec<Dim> g = op.phase().grad_theta(x_probes[p], net.directions[nu]);
    const Eigen::Matrix<double, Dim, 1> gr = net.frames[nu] * to_eigen<Dim>(g);
    Vec<Dim> g_perp{};
    {
      Eigen::Matrix<double, Dim, 1> t = gr;
      t(0) = 0.0;
      g_perp = from_eigen<Dim>(net.frames[nu].transpose() * t);
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double mag = std::abs(slice.values[p][k]);
      if (mag == 0.0) continue;
      const Vec<Dim> z = grid.centered_offset(k);
      full = std::max(full, std::pow(g_weight(net, j, nu, net.type, g + z), power) * mag);
      transverse = std::max(transverse, std::pow(g_weight(net, j, nu, net.type, g_perp + z), power) * mag);
    }
  }
  return {full, transverse};
}

template <int Dim>
struct SplitValues {
  std::vector<Complex> a;  // |z| > R
  std::vector<Complex> b;  // |z| <= R
};

namespace detail {

// Precomputed lattice offsets for z-sums: y = x - z on the periodic lattice.
template <int Dim>
class OffsetTable {
 public:
  OffsetTable(const Grid<Dim>& grid, double radius) : grid_(grid) {
    wave_.resize(grid.size());
    near_.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      wave_[k] = grid.wavenumber(k);
      near_[k] = norm<Dim>(grid.centered_offset(k)) <= radius ? 1 : 0;
    }
  }

  // Returns (far, near) sums of K(x, z) f(x - z) h^n for each function in `fs`.
  std::vector<std::pair<Complex, Complex>> sums(std::span<const Complex> kernel, std::size_t x_flat,
                                                const std::vector<const SampledFunction<Dim>*>& fs) const {
    const auto n = static_cast<std::int64_t>(grid_.samples_per_axis());
    const Index<Dim> x = grid_.unflatten(x_flat);
    std::vector<std::pair<Complex, Complex>> out(fs.size(), {Complex{}, Complex{}});
    for (std::size_t k = 0; k < wave_.size(); ++k) {
      std::size_t flat = 0;
      for (int i = 0; i < Dim; ++i)
        flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>((x[i] - wave_[k][i]) & (n - 1));
      const Complex kv = kernel[k];
      for (std::size_t q = 0; q < fs.size(); ++q) {
        const Complex term = kv * (*fs[q])[flat];
        if (near_[k])
          out[q].second += term;
        else
          out[q].first += term;
      }
    }
    const double cell = grid_.cell_volume();
    for (auto& [a, b] : out) {
      a *= cell;
      b *= cell;
    }
    return out;
  }

 private:
  Grid<Dim> grid_;
  std::vector<Index<Dim>> wave_;
  std::vector<char> near_;
};

}  // namespace detail

/// T_j^A f and T_j^B f at lattice probes, split at |z| = R.
template <int Dim>
SplitValues<Dim> split_T_AB(const FioOperator<Dim>& op, const LPPartition& part, int j,
                            const SampledFunction<Dim>& f, const std::vector<Vec<Dim>>& x_probes) {
  require(f.grid == op.grid(), "function and operator live on different grids");
  SplitValues<Dim> out;
  const detail::OffsetTable<Dim> table(op.grid(), op.split_radius());
  for_each_kernel(op, part, j, x_probes, [&](std::size_t p, std::span<const Complex> k) {
    const auto sums = table.sums(k, lattice_flat(op.grid(), x_probes[p]), {&f});
    out.a.push_back(sums[0].first);
    out.b.push_back(sums[0].second);
  });
  return out;
}

/// T_j^B (f chi_{Q/3}) at lattice probes. Needs side(Q) >= 3R.
template <int Dim>
std::vector<Complex> apply_TjB_localized(const FioOperator<Dim>& op, const LPPartition& part, int j,
                                         const SampledFunction<Dim>& f, const DyadicCube<Dim>& q,
                                         const std::vector<Vec<Dim>>& x_probes) {
  require(q.valid(), "invalid dyadic cube");
  if (q.side(op.grid().period()) < 3.0 * op.split_radius())
    throw DomainError("cube side " + std::to_string(q.side(op.grid().period())) + " is below 3R = " +
                      std::to_string(3.0 * op.split_radius()));
  const auto g = restrict_to_third(f, q);
  return split_T_AB(op, part, j, g, x_probes).b;
}

}  // namespace roughfio
