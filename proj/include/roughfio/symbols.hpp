#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "roughfio/grid.hpp"
#include "roughfio/inputs.hpp"
#include "roughfio/vec.hpp"

namespace roughfio {

template <int Dim>
using XLabel = std::function<std::uint64_t(const Vec<Dim>&)>;

/**
 * Amplitude a(x, xi) of order m and type rho: rough (bounded measurable)
 * in x, smooth in xi.
 *
 * `x_label`, when set, promises that a(x, .) depends on x only through the
 * label value; the engine uses it to evaluate on whole lattices with one
 * FFT per label. Amplitudes produced by weight_amplitude keep a pointer to
 * their unweighted base so that repeated weighting composes exactly.
 */
template <int Dim>
struct Amplitude {
  std::function<Complex(const Vec<Dim>&, const Vec<Dim>&)> eval;
  double order = 0.0;
  double type = 1.0;
  std::map<MultiIndex<Dim>, double> claimed_constants;
  XLabel<Dim> x_label;
  std::shared_ptr<const Amplitude> weight_base;
  Complex weight{0.0, 0.0};

  Complex operator()(const Vec<Dim>& x, const Vec<Dim>& xi) const { return eval(x, xi); }
};

/**
 * Phase phi(x, xi) = x.xi + theta(x, xi). Only theta is stored; gradients and
 * Hessians in xi are analytic when callbacks are supplied and finite
 * differences otherwise.
 */
template <int Dim>
class Phase {
 public:
  using ThetaFn = std::function<double(const Vec<Dim>&, const Vec<Dim>&)>;
  using GradFn = std::function<Vec<Dim>(const Vec<Dim>&, const Vec<Dim>&)>;
  using HessFn = std::function<Mat<Dim>(const Vec<Dim>&, const Vec<Dim>&)>;

  // Relative steps: gradients use second-order central differences, Hessians a
  // fourth-order stencil.
  static constexpr double kGradientStep = 1e-5;
  static constexpr double kHessianStep = 1e-3;

  static Phase from_theta(ThetaFn theta, GradFn grad = {}, HessFn hess = {}) {
    Phase p;
    p.theta_ = std::move(theta);
    p.grad_ = std::move(grad);
    p.hess_ = std::move(hess);
    return p;
  }

  static Phase from_phase(ThetaFn phi) {
    return from_theta([phi = std::move(phi)](const Vec<Dim>& x, const Vec<Dim>& xi) {
      return phi(x, xi) - dot<Dim>(x, xi);
    });
  }

  double operator()(const Vec<Dim>& x, const Vec<Dim>& xi) const { return dot<Dim>(x, xi) + theta_(x, xi); }
  double theta(const Vec<Dim>& x, const Vec<Dim>& xi) const { return theta_(x, xi); }

  bool analytic_gradient() const { return static_cast<bool>(grad_); }
  bool analytic_hessian() const { return static_cast<bool>(hess_); }

  Vec<Dim> grad_theta(const Vec<Dim>& x, const Vec<Dim>& xi) const {
    if (grad_) return grad_(x, xi);
    const double h = kGradientStep * std::max(norm<Dim>(xi), 1e-300);
    Vec<Dim> g{};
    for (int i = 0; i < Dim; ++i) {
      Vec<Dim> p = xi, m = xi;
      p[i] += h;
      m[i] -= h;
      g[i] = (theta_(x, p) - theta_(x, m)) / (2.0 * h);
    }
    return g;
  }

  Mat<Dim> hess_theta(const Vec<Dim>& x, const Vec<Dim>& xi) const {
    if (hess_) return hess_(x, xi);
    static constexpr double w[4] = {1.0, -8.0, 8.0, -1.0};
    static constexpr double off[4] = {-2.0, -1.0, 1.0, 2.0};
    const double h = kHessianStep * std::max(norm<Dim>(xi), 1e-300);
    Mat<Dim> hess;
    for (int i = 0; i < Dim; ++i) {
      // Pure second derivative, fourth order.
      {
        Vec<Dim> p1 = xi, m1 = xi, p2 = xi, m2 = xi;
        p1[i] += h;
        m1[i] -= h;
        p2[i] += 2 * h;
        m2[i] -= 2 * h;
        hess(i, i) = (-theta_(x, p2) + 16.0 * theta_(x, p1) - 30.0 * theta_(x, xi) + 16.0 * theta_(x, m1) -
                      theta_(x, m2)) /
                     (12.0 * h * h);
      }
      for (int j = i + 1; j < Dim; ++j) {
        double s = 0.0;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) {
            Vec<Dim> q = xi;
            q[i] += off[a] * h;
            q[j] += off[b] * h;
            s += w[a] * w[b] * theta_(x, q);
          }
        hess(i, j) = hess(j, i) = s / (144.0 * h * h);
      }
    }
    return hess;
  }

  std::string name;
  double claimed_nondegeneracy = 0.0;
  double claimed_measure_constant = 0.0;
  // Optional promise that theta(x, .) depends on x only through the label.
  XLabel<Dim> x_label;

 private:
  ThetaFn theta_;
  GradFn grad_;
  HessFn hess_;
};

/// theta(x, xi) = phi(x, xi) - x.xi.
template <int Dim>
std::function<double(const Vec<Dim>&, const Vec<Dim>&)> theta_of(const Phase<Dim>& phi) {
  return [phi](const Vec<Dim>& x, const Vec<Dim>& xi) { return phi.theta(x, xi); };
}

/**
 * Residuals of the Euler identities for a degree-one homogeneous theta:
 * first = |theta - grad theta . xi|, second = max_k |(grad d_k theta) . xi|.
 */
template <int Dim>
std::pair<double, double> euler_residual(const Phase<Dim>& phi, const Vec<Dim>& x, const Vec<Dim>& xi) {
  require(norm<Dim>(xi) > 0.0, "euler_residual needs xi != 0");
  const double first = std::abs(phi.theta(x, xi) - dot<Dim>(phi.grad_theta(x, xi), xi));
  const Eigen::Matrix<double, Dim, 1> hx = phi.hess_theta(x, xi) * to_eigen<Dim>(xi);
  return {first, hx.cwiseAbs().maxCoeff()};
}

// ---------------------------------------------------------------------------
// Probe sets.

/// Deterministic directions on the unit sphere: {+1,-1} in 1D, equally spaced
/// angles in 2D, a Fibonacci lattice in 3D.
template <int Dim>
std::vector<Vec<Dim>> sphere_directions(std::size_t count) {
  std::vector<Vec<Dim>> out;
  if constexpr (Dim == 1) {
    out = {Vec<1>{1.0}, Vec<1>{-1.0}};
  } else if constexpr (Dim == 2) {
    for (std::size_t k = 0; k < count; ++k) {
      const double a = 2.0 * kPi * (static_cast<double>(k) + 0.5) / static_cast<double>(count);
      out.push_back({std::cos(a), std::sin(a)});
    }
  } else {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (std::size_t k = 0; k < count; ++k) {
      const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(count);
      const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * static_cast<double>(k);
      out.push_back({rad * std::cos(a), rad * std::sin(a), z});
    }
  }
  return out;
}

/// Frequency probes on the dyadic shells |xi| = 2, 4, ..., 2^J.
template <int Dim>
std::vector<Vec<Dim>> shell_probes(int max_shell, std::size_t angular = 32) {
  std::vector<Vec<Dim>> out;
  const auto dirs = sphere_directions<Dim>(angular);
  for (int j = 1; j <= max_shell; ++j)
    for (const auto& d : dirs) out.push_back(std::ldexp(1.0, j) * d);
  return out;
}

template <int Dim>
struct SymbolProbes {
  std::vector<Vec<Dim>> x;
  std::vector<Vec<Dim>> xi;
};

namespace detail {

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double derivative_step(int total_order) {
  switch (total_order) {
    case 0: return 0.0;
    case 1: return 1e-5;
    case 2: return 1e-4;
    case 3: return 1e-3;
    default: return 3e-3;
  }
}

// Tensor-product central difference of order alpha with step h.
template <int Dim, class T, class Fn>
T central_difference(Fn&& fn, const Vec<Dim>& xi, const MultiIndex<Dim>& alpha, double h) {
  std::array<int, Dim> k{};
  T sum{};
  while (true) {
    Vec<Dim> p = xi;
    double weight = 1.0;
    for (int i = 0; i < Dim; ++i) {
      p[i] += (0.5 * alpha[i] - k[i]) * h;
      weight *= ((k[i] % 2) ? -1.0 : 1.0) * binomial(alpha[i], k[i]);
    }
    sum += weight * fn(p);
    int axis = 0;
    while (axis < Dim && ++k[axis] > alpha[axis]) {
      k[axis] = 0;
      ++axis;
    }
    if (axis == Dim) break;
  }
  return sum / std::pow(h, order<Dim>(alpha));
}

template <int Dim>
void check_alpha(const MultiIndex<Dim>& alpha, int max_order) {
  for (int a : alpha) require(a >= 0, "multi-index entries must be non-negative");
  require(order<Dim>(alpha) <= max_order, "multi-index order too large");
}

}  // namespace detail

/**
 * Lower estimate of the seminorm constant C_alpha:
 * max over probes of (1+|xi|^2)^{(-m + rho|alpha|)/2} |d^alpha_xi a(x, xi)|.
 */
template <int Dim>
double estimate_amplitude_seminorm(const Amplitude<Dim>& a, const MultiIndex<Dim>& alpha,
                                   const SymbolProbes<Dim>& probes) {
  detail::check_alpha<Dim>(alpha, 4);
  const int q = order<Dim>(alpha);
  double best = 0.0;
  for (const auto& x : probes.x)
    for (const auto& xi : probes.xi) {
      const double h = detail::derivative_step(q) * std::max(norm<Dim>(xi), 1.0);
      const Complex d = q == 0 ? a(x, xi)
                               : detail::central_difference<Dim, Complex>(
                                     [&](const Vec<Dim>& p) { return a(x, p); }, xi, alpha, h);
      if (!std::isfinite(d.real()) || !std::isfinite(d.imag()))
        throw NumericalError("non-finite amplitude derivative at x=" + to_string<Dim>(x) +
                             " xi=" + to_string<Dim>(xi));
      const double w = std::pow(1.0 + dot<Dim>(xi, xi), (-a.order + a.type * q) / 2.0);
      best = std::max(best, w * std::abs(d));
    }
  return best;
}

/// Lower estimate of the phase seminorm sup |xi|^{|alpha|-1} |d^alpha_xi theta(x, xi)|, |alpha| >= 1.
template <int Dim>
double estimate_phase_seminorm(const Phase<Dim>& phi, const MultiIndex<Dim>& alpha,
                               const SymbolProbes<Dim>& probes) {
  detail::check_alpha<Dim>(alpha, 4);
  const int q = order<Dim>(alpha);
  require(q >= 1, "phase seminorms are taken for |alpha| >= 1");
  double best = 0.0;
  for (const auto& x : probes.x)
    for (const auto& xi : probes.xi) {
      const double r = norm<Dim>(xi);
      require(r > 0.0, "phase seminorm probes must avoid xi = 0");
      double d;
      if (q == 1 && phi.analytic_gradient()) {
        int axis = 0;
        while (alpha[axis] == 0) ++axis;
        d = phi.grad_theta(x, xi)[axis];
      } else {
        d = detail::central_difference<Dim, double>([&](const Vec<Dim>& p) { return phi.theta(x, p); }, xi,
                                                    alpha, detail::derivative_step(q) * r);
      }
      if (!std::isfinite(d))
        throw NumericalError("non-finite phase derivative at x=" + to_string<Dim>(x) + " xi=" + to_string<Dim>(xi));
      best = std::max(best, std::pow(r, q - 1) * std::abs(d));
    }
  return best;
}

/**
 * det_{n-1}: determinant of M restricted to the orthogonal complement of its
 * kernel. M must have numerical rank exactly n - 1.
 */
template <int Dim>
double det_minor(const Mat<Dim>& m) {
  if constexpr (Dim == 1) {
    if (std::abs(m(0, 0)) > 1e-8)
      throw NumericalError("det_minor: 1x1 matrix has rank 1 (value " + std::to_string(m(0, 0)) + ")");
    return 1.0;
  } else {
    Eigen::JacobiSVD<Mat<Dim>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double largest = s(0);
    const double smallest = s(Dim - 1);
    const double second = s(Dim - 2);
    if (!(largest > 0.0) || smallest > 1e-8 * largest || second <= 1e-6 * largest)
      throw NumericalError("det_minor: rank is not n-1 (two smallest singular values " +
                           std::to_string(smallest) + ", " + std::to_string(second) + ")");
    const Eigen::Matrix<double, Dim, Dim - 1> basis = svd.matrixV().leftCols(Dim - 1);
    return (basis.transpose() * m * basis).determinant();
  }
}

/// Certified non-degeneracy floor: min over probes of |det_{n-1} d^2_xi phi(x, omega)|.
template <int Dim>
double nondegeneracy_min(const Phase<Dim>& phi, const std::vector<Vec<Dim>>& x_probes,
                         const std::vector<Vec<Dim>>& sphere_probes) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& x : x_probes)
    for (const auto& w : sphere_probes) {
      try {
        best = std::min(best, std::abs(det_minor<Dim>(phi.hess_theta(x, w))));
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at x=" + to_string<Dim>(x) + " xi=" + to_string<Dim>(w));
      }
    }
  return best;
}

/**
 * Largest c with |{x : |grad_xi phi(x, xi) - y| <= r}| <= r^n / c over all
 * probes, the measure counted on the spatial lattice. Empty sets impose no
 * constraint.
 */
template <int Dim>
double measure_condition_constant(const Phase<Dim>& phi, const Grid<Dim>& grid, const std::vector<double>& radii,
                                  const std::vector<Vec<Dim>>& y_probes, const std::vector<Vec<Dim>>& xi_probes) {
  for (double r : radii)
    require(r >= grid.spacing() * (1 - 1e-12) && r <= grid.period() / 4 * (1 + 1e-12),
            "radii must lie in [L/N, L/4]");
  std::vector<Vec<Dim>> points(grid.size());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& xi : xi_probes) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Vec<Dim> x = grid.point(k);
      points[k] = x + phi.grad_theta(x, xi);
    }
    for (const auto& y : y_probes)
      for (double r : radii) {
        std::size_t count = 0;
        for (const auto& p : points)
          if (norm<Dim>(p - y) <= r) ++count;
        if (count == 0) continue;
        const double measure = static_cast<double>(count) * grid.cell_volume();
        best = std::min(best, std::pow(r, Dim) / measure);
      }
  }
  return best;
}

/// a_w(x, xi) = a(x, xi) (1 + |xi|^2)^w; order m + 2 Re(w).
template <int Dim>
Amplitude<Dim> weight_amplitude(const Amplitude<Dim>& a, Complex w) {
  std::shared_ptr<const Amplitude<Dim>> base =
      a.weight_base ? a.weight_base : std::make_shared<const Amplitude<Dim>>(a);
  const Complex total = a.weight_base ? a.weight + w : w;
  Amplitude<Dim> out;
  out.order = base->order + 2.0 * total.real();
  out.type = base->type;
  out.x_label = base->x_label;
  out.weight_base = base;
  out.weight = total;
  out.eval = [base, total](const Vec<Dim>& x, const Vec<Dim>& xi) {
    const Complex v = (*base)(x, xi);
    if (total == Complex{0.0, 0.0}) return v;
    return v * std::pow(Complex(1.0 + dot<Dim>(xi, xi), 0.0), total);
  };
  return out;
}

namespace detail {

template <int Dim, class Fn>
double checked_sup_on_grid(Fn&& fn, const Grid<Dim>& grid, const char* what) {
  double s = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double v = std::abs(fn(grid.point(k)));
    if (!std::isfinite(v) || v > 1e12)
      throw DomainError(std::string(what) + " is unbounded on the grid at x=" + to_string<Dim>(grid.point(k)));
    s = std::max(s, v);
  }
  return s;
}

}  // namespace detail

/**
 * Half-wave archetype phi(x, xi) = x.xi + t(x)|xi| with analytic gradient
 * t xi/|xi| and Hessian t (I - xi xi^T/|xi|^2)/|xi|.
 */
template <int Dim>
Phase<Dim> phase_archetype(std::function<double(const Vec<Dim>&)> t, const Grid<Dim>& grid,
                           XLabel<Dim> label = {}) {
  detail::checked_sup_on_grid<Dim>(t, grid, "t(x)");
  double t_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) t_min = std::min(t_min, std::abs(t(grid.point(k))));
  auto phase = Phase<Dim>::from_theta(
      [t](const Vec<Dim>& x, const Vec<Dim>& xi) { return t(x) * norm<Dim>(xi); },
      [t](const Vec<Dim>& x, const Vec<Dim>& xi) {
        const double r = norm<Dim>(xi);
        if (r == 0.0) return Vec<Dim>{};
        return (t(x) / r) * xi;
      },
      [t](const Vec<Dim>& x, const Vec<Dim>& xi) {
        const double r = norm<Dim>(xi);
        const Eigen::Matrix<double, Dim, 1> u = to_eigen<Dim>(xi) / r;
        Mat<Dim> h = (Mat<Dim>::Identity() - u * u.transpose()) * (t(x) / r);
        return h;
      });
  phase.name = "archetype";
  phase.claimed_nondegeneracy = std::pow(t_min, Dim - 1);
  phase.x_label = std::move(label);
  return phase;
}

template <int Dim>
Phase<Dim> phase_archetype(const PiecewiseConstant<Dim>& t, const Grid<Dim>& grid) {
  return phase_archetype<Dim>([t](const Vec<Dim>& x) { return t(x); }, grid,
                              [t](const Vec<Dim>& x) { return t.label(x); });
}

/// rough(x) (1 + |xi|^2)^{m/2}; claimed C_0 = sup |rough| on the grid.
template <int Dim>
Amplitude<Dim> amplitude_power(double m, double rho, std::function<Complex(const Vec<Dim>&)> rough,
                               const Grid<Dim>& grid, XLabel<Dim> label = {}) {
  require(rho >= 0.0 && rho <= 1.0, "amplitude type rho must lie in [0, 1]");
  const double sup = detail::checked_sup_on_grid<Dim>(rough, grid, "rough amplitude factor");
  Amplitude<Dim> a;
  a.order = m;
  a.type = rho;
  a.claimed_constants[MultiIndex<Dim>{}] = sup;
  a.x_label = std::move(label);
  a.eval = [m, rough](const Vec<Dim>& x, const Vec<Dim>& xi) {
    const Complex r = rough(x);
    if (m == 0.0) return r;
    return r * std::pow(1.0 + dot<Dim>(xi, xi), m / 2.0);
  };
  return a;
}

/// One audit outcome: {audit, probes, value, tolerance, pass}.
struct AuditRecord {
  std::string audit;
  std::size_t probes = 0;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

}  // namespace roughfio
