#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <unordered_map>
#include <utility>
#include <vector>

#include "roughfio/inputs.hpp"
#include "roughfio/symbols.hpp"
#include "roughfio/vec.hpp"

namespace roughfio {

/**
 * Radial Littlewood-Paley partition. psi0 is 1 on |xi| <= 1 and 0 on
 * |xi| >= 2; psi_j(xi) = psi0(2^-j xi) - psi0(2^{1-j} xi) for j >= 1.
 */
struct LPPartition {
  int j_max = 40;

  static double psi0_radial(double r) { return smooth_step(2.0 - r); }

  double psi_radial(int j, double r) const {
    require(j >= 0 && j <= j_max, "Littlewood-Paley index out of range");
    if (j == 0) return psi0_radial(r);
    return psi0_radial(std::ldexp(r, -j)) - psi0_radial(std::ldexp(r, 1 - j));
  }

  template <int Dim>
  double psi(int j, const Vec<Dim>& xi) const {
    return psi_radial(j, norm<Dim>(xi));
  }

  // Radial support [inner, outer] of psi_j.
  static std::pair<double, double> support(int j) {
    if (j == 0) return {0.0, 2.0};
    return {std::ldexp(1.0, j - 1), std::ldexp(1.0, j + 1)};
  }
};

template <int Dim>
double lp_psi(const LPPartition& part, int j, const Vec<Dim>& xi) {
  return part.psi<Dim>(j, xi);
}

/// Bump for the angular cutoffs: 1 on |u| <= 1, 0 on |u| >= 3/2.
inline double angular_bump(double u) { return smooth_step(3.0 - 2.0 * u); }

/**
 * Level-j angular net on the unit sphere: delta-separated and delta-covering
 * with delta = 2^{-j rho / 2}. Each direction carries an orthogonal frame
 * mapping it to e1.
 */
template <int Dim>
struct AngularNet {
  int level = 0;
  double type = 1.0;
  double delta = 1.0;
  std::vector<Vec<Dim>> directions;
  std::vector<Mat<Dim>> frames;

  std::size_t size() const { return directions.size(); }
};

namespace detail {

template <int Dim>
Mat<Dim> frame_to_e1(const Vec<Dim>& u) {
  Mat<Dim> r = Mat<Dim>::Identity();
  if constexpr (Dim == 1) {
    r(0, 0) = u[0] >= 0 ? 1.0 : -1.0;
  } else if constexpr (Dim == 2) {
    // Givens rotation.
    r << u[0], u[1], -u[1], u[0];
  } else {
    // Householder reflection I - 2 v v^T / |v|^2 with v = u - e1.
    Eigen::Vector3d v = to_eigen<3>(u);
    v(0) -= 1.0;
    const double vv = v.squaredNorm();
    if (vv > 1e-30) r -= 2.0 * v * v.transpose() / vv;
  }
  return r;
}

// Uniform-grid spatial hash over R^3 for neighbour queries on the sphere.
class SphereHash {
 public:
  explicit SphereHash(double cell) : cell_(cell) {}

  void insert(const Vec<3>& p, std::size_t id) { buckets_[key(cell_of(p))].push_back(id); }

  template <class Fn>
  void visit(const Vec<3>& p, Fn&& fn) const {
    const auto c = cell_of(p);
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int d = -1; d <= 1; ++d) {
          auto it = buckets_.find(key({c[0] + a, c[1] + b, c[2] + d}));
          if (it == buckets_.end()) continue;
          for (auto id : it->second) fn(id);
        }
  }

 private:
  std::array<std::int64_t, 3> cell_of(const Vec<3>& p) const {
    return {static_cast<std::int64_t>(std::floor(p[0] / cell_)), static_cast<std::int64_t>(std::floor(p[1] / cell_)),
            static_cast<std::int64_t>(std::floor(p[2] / cell_))};
  }
  static std::uint64_t key(const std::array<std::int64_t, 3>& c) {
    return (static_cast<std::uint64_t>(c[0] + (1 << 20)) << 42) ^ (static_cast<std::uint64_t>(c[1] + (1 << 20)) << 21) ^
           static_cast<std::uint64_t>(c[2] + (1 << 20));
  }

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

inline std::vector<Vec<3>> fibonacci_sphere(std::size_t count) { return sphere_directions<3>(count); }

}  // namespace detail

/**
 * Deterministic net: {+1, -1} in 1D; equally spaced angles in 2D; in 3D a
 * greedy delta-thinning of dense Fibonacci candidates followed by insertion of
 * uncovered directions found on a denser deterministic sample.
 */
template <int Dim>
AngularNet<Dim> build_angular_net(int j, double rho) {
  require(j >= 1, "angular nets are built for j >= 1");
  require(rho >= 0.0 && rho <= 1.0, "type rho must lie in [0, 1]");
  AngularNet<Dim> net;
  net.level = j;
  net.type = rho;
  net.delta = std::exp2(-j * rho / 2.0);
  const double delta = net.delta;
  if constexpr (Dim == 1) {
    net.directions = {Vec<1>{1.0}, Vec<1>{-1.0}};
  } else if constexpr (Dim == 2) {
    const auto count = static_cast<std::size_t>(std::floor(kPi / std::asin(delta / 2.0) + 1e-9));
    for (std::size_t k = 0; k < count; ++k) {
      const double a = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(count);
      net.directions.push_back({std::cos(a), std::sin(a)});
    }
  } else {
    const double d2 = delta * delta;
    detail::SphereHash hash(delta);
    auto far_from_net = [&](const Vec<3>& p) {
      bool ok = true;
      hash.visit(p, [&](std::size_t id) {
        const Vec<3> diff = p - net.directions[id];
        if (dot<3>(diff, diff) < d2) ok = false;
      });
      return ok;
    };
    auto add = [&](const Vec<3>& p) {
      hash.insert(p, net.directions.size());
      net.directions.push_back(p);
    };
    // Candidate spacing about delta / 8.
    const auto candidates = static_cast<std::size_t>(std::ceil(4.0 * kPi / std::pow(delta / 8.0, 2)));
    for (const auto& p : detail::fibonacci_sphere(candidates))
      if (far_from_net(p)) add(p);
    for (const auto& p : detail::fibonacci_sphere(std::max<std::size_t>(100000, 4 * candidates)))
      if (far_from_net(p)) add(p);
  }
  for (const auto& u : net.directions) net.frames.push_back(detail::frame_to_e1<Dim>(u));
  return net;
}

/// Minimum pairwise chord distance (exhaustive).
template <int Dim>
double net_separation(const AngularNet<Dim>& net) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < net.size(); ++a)
    for (std::size_t b = a + 1; b < net.size(); ++b)
      best = std::min(best, norm<Dim>(net.directions[a] - net.directions[b]));
  return best;
}

/// Largest distance from a test direction to its nearest net element. In 2D
/// the test set is the set of gap midpoints (exact); otherwise `samples`
/// seeded uniform directions.
template <int Dim>
double net_covering_radius(const AngularNet<Dim>& net, std::size_t samples = 10000, std::uint64_t seed = 7) {
  if (net.directions.empty()) return std::numeric_limits<double>::infinity();
  if constexpr (Dim == 2) {
    std::vector<double> angles;
    for (const auto& u : net.directions) angles.push_back(std::atan2(u[1], u[0]));
    std::sort(angles.begin(), angles.end());
    double gap = angles.front() + 2.0 * kPi - angles.back();
    for (std::size_t k = 1; k < angles.size(); ++k) gap = std::max(gap, angles[k] - angles[k - 1]);
    return 2.0 * std::sin(gap / 4.0);
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      Vec<Dim> p{};
      for (auto& c : p) c = normal(rng);
      if constexpr (Dim == 1) p[0] = p[0] >= 0 ? 1.0 : -1.0;
      p = (1.0 / norm<Dim>(p)) * p;
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& u : net.directions) nearest = std::min(nearest, norm<Dim>(p - u));
      worst = std::max(worst, nearest);
    }
    return worst;
  }
}

struct NetCertificate {
  double separation = 0.0;
  double covering = 0.0;
  bool separated = false;
  bool covering_ok = false;
};

template <int Dim>
NetCertificate verify_net(const AngularNet<Dim>& net, std::size_t samples = 10000) {
  NetCertificate c;
  c.separation = net.size() < 2 ? std::numeric_limits<double>::infinity() : net_separation(net);
  c.covering = net_covering_radius(net, samples);
  c.separated = c.separation >= net.delta * (1.0 - 1e-12);
  c.covering_ok = c.covering <= net.delta * (1.0 + 1e-12);
  return c;
}

/// Angular cutoffs at direction xi: the list of (nu, eta_j^nu(xi)) with non-zero weight.
template <int Dim>
std::vector<std::pair<std::size_t, double>> eta_weights(const AngularNet<Dim>& net, const Vec<Dim>& xi) {
  const double r = norm<Dim>(xi);
  require(r > 0.0, "eta is undefined at xi = 0");
  const Vec<Dim> u = (1.0 / r) * xi;
  const double scale = 1.0 / net.delta;
  std::vector<std::pair<std::size_t, double>> out;
  double total = 0.0;
  for (std::size_t nu = 0; nu < net.size(); ++nu) {
    const double b = angular_bump(scale * norm<Dim>(u - net.directions[nu]));
    if (b > 0.0) {
      out.emplace_back(nu, b);
      total += b;
    }
  }
  if (!(total > 0.0)) throw NumericalError("direction not covered by the angular net: " + to_string<Dim>(u));
  for (auto& [nu, w] : out) w /= total;
  return out;
}

template <int Dim>
double eta(const AngularNet<Dim>& net, std::size_t nu, const Vec<Dim>& xi) {
  require(nu < net.size(), "net index out of range");
  for (const auto& [k, w] : eta_weights(net, xi))
    if (k == nu) return w;
  return 0.0;
}

/**
 * b_j^nu(x, xi) = exp(i 2^{j rho} (grad theta(x, xi) - grad theta(x, xi^nu)) . xi)
 *                 psi_1(2^{j(rho-1)+1} xi) eta_j^nu(xi) a(x, 2^{j rho} xi).
 */
template <int Dim>
std::function<Complex(const Vec<Dim>&, const Vec<Dim>&)> b_symbol(const Amplitude<Dim>& a, const Phase<Dim>& phi,
                                                                  const LPPartition& part,
                                                                  const AngularNet<Dim>& net, int j,
                                                                  std::size_t nu) {
  require(j >= 1, "b_j^nu is defined for j >= 1");
  require(nu < net.size(), "net index out of range");
  const double rho = net.type;
  const double up = std::exp2(j * rho);
  const double cut = std::exp2(j * (rho - 1.0) + 1.0);
  return [=](const Vec<Dim>& x, const Vec<Dim>& xi) -> Complex {
    const double r = norm<Dim>(xi);
    if (r == 0.0) return 0.0;
    const double psi = part.psi_radial(1, cut * r);
    if (psi == 0.0) return 0.0;
    const double e = eta(net, nu, xi);
    if (e == 0.0) return 0.0;
    const Vec<Dim> g = phi.grad_theta(x, xi) - phi.grad_theta(x, net.directions[nu]);
    const double arg = up * dot<Dim>(g, xi);
    return std::polar(1.0, arg) * psi * e * a(x, up * xi);
  };
}

/// g_j^nu(z) = 1 + 2^{2 j rho} z1^2 + 2^{j rho} |z'|^2 with z expressed in the nu-frame.
template <int Dim>
double g_weight(const AngularNet<Dim>& net, int j, std::size_t nu, double rho, const Vec<Dim>& z) {
  require(nu < net.size(), "net index out of range");
  const Vec<Dim> w = from_eigen<Dim>(net.frames[nu] * to_eigen<Dim>(z));
  double tail = 0.0;
  for (int i = 1; i < Dim; ++i) tail += w[i] * w[i];
  return 1.0 + std::exp2(2.0 * j * rho) * w[0] * w[0] + std::exp2(j * rho) * tail;
}

}  // namespace roughfio
