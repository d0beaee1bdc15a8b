#pragma once

#include <algorithm>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/rational.hpp>

#include "roughfio/vec.hpp"

namespace roughfio {

// Threshold calculus. Every routine is templated on the scalar: Rational for
// exact corner arithmetic, double otherwise. Lebesgue exponents are carried as
// reciprocals so that 1/infinity is an exact zero.

using Rational = boost::rational<long long>;

template <class S>
S scalar(long long num, long long den = 1) {
  if constexpr (std::is_same_v<S, Rational>)
    return Rational(num, den);
  else
    return static_cast<S>(num) / static_cast<S>(den);
}

inline double to_double(const Rational& q) { return boost::rational_cast<double>(q); }
inline double to_double(double v) { return v; }

template <class S>
struct Exponent {
  S inv{};  // 1/p, zero for p = infinity

  static Exponent of(S p) {
    require(p > scalar<S>(0), "Lebesgue exponents must be positive");
    return Exponent{scalar<S>(1) / p};
  }
  static Exponent reciprocal(S inv) {
    require(inv >= scalar<S>(0), "reciprocal exponent must be non-negative");
    return Exponent{inv};
  }
  static Exponent infinity() { return Exponent{scalar<S>(0)}; }

  bool is_infinite() const { return inv == scalar<S>(0); }
  // Hoelder conjugate: 1/p' = 1 - 1/p.
  Exponent dual() const { return Exponent{scalar<S>(1) - inv}; }
};

enum class Region { case1, case2, case3, overlap_min };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::case1: return "case1";
    case Region::case2: return "case2";
    case Region::case3: return "case3";
    default: return "overlap-min";
  }
}

template <class S>
struct ThresholdResult {
  S value{};
  Region region = Region::case1;
  int n = 0;
  S rho{};
  Exponent<S> r, s;
  std::vector<std::pair<Region, S>> applicable;  // every case whose condition holds
};

namespace detail {

inline void check_dim(int n) { require(n >= 1, "dimension must be >= 1"); }

template <class S>
void check_rho(const S& rho) {
  require(rho >= scalar<S>(0) && rho <= scalar<S>(1), "rho must lie in [0, 1]");
}

}  // namespace detail

/// Largest admissible order for the pointwise maximal bound: -(n-1)rho/2 - rho/r - n(1-rho)/r, r in [1, 2].
template <class S>
S pointwise_threshold(int n, S rho, Exponent<S> r) {
  detail::check_dim(n);
  detail::check_rho(rho);
  require(r.inv >= scalar<S>(1, 2) && r.inv <= scalar<S>(1), "pointwise threshold needs r in [1, 2]");
  const S nn = scalar<S>(n);
  return -(nn - 1) * rho / 2 - rho * r.inv - nn * (1 - rho) * r.inv;
}

/// Linear coefficients (d/d(1/r), d/d(1/s)) of each piece of m_rho.
template <class S>
std::pair<S, S> m_rho_gradient(int n, S rho, Region region) {
  const S nn = scalar<S>(n);
  switch (region) {
    case Region::case1: return {-rho, (nn + 1) * rho / 2};
    case Region::case2: return {(nn - 1) * rho - nn, (nn + 1) * rho / 2};
    case Region::case3: return {-(nn + 1) / 2, (3 * rho - 1 + nn * (rho - 1)) / 2};
    default: throw DomainError("overlap-min has no single linear piece");
  }
}

template <class S>
S m_rho_piece(int n, S rho, Exponent<S> r, Exponent<S> s, Region region) {
  const S nn = scalar<S>(n);
  const S half = scalar<S>(1, 2);
  const S base = -nn * (1 - rho) / 2 - (nn - 1) * rho / 4;
  const auto [ga, gb] = m_rho_gradient(n, rho, region);
  return base + ga * (r.inv - half) + gb * (s.inv - half);
}

/**
 * m_rho(r, s) for 1 <= r <= s <= infinity. All cases whose conditions hold
 * are evaluated; if they disagree the minimum is returned, tagged overlap-min.
 */
template <class S>
ThresholdResult<S> m_rho(int n, S rho, Exponent<S> r, Exponent<S> s) {
  detail::check_dim(n);
  require(rho > scalar<S>(0) && rho <= scalar<S>(1), "m_rho needs rho in (0, 1]");
  require(r.inv <= scalar<S>(1) && s.inv <= scalar<S>(1), "exponents must be >= 1");
  require(s.inv <= r.inv, "m_rho needs r <= s");
  const S half = scalar<S>(1, 2);
  const S a = r.inv, b = s.inv;
  ThresholdResult<S> out;
  out.n = n;
  out.rho = rho;
  out.r = r;
  out.s = s;
  // 2 <= r <= s
  const bool c1 = a <= half;
  // s' <= r <= 2
  const bool c2a = a >= half && a <= 1 - b;
  // r <= s <= r'
  const bool c_dual = b >= 1 - a;
  const bool c2 = c2a || (c_dual && rho <= half);
  const bool c3 = c_dual && rho > half;
  if (c1) out.applicable.emplace_back(Region::case1, m_rho_piece(n, rho, r, s, Region::case1));
  if (c2) out.applicable.emplace_back(Region::case2, m_rho_piece(n, rho, r, s, Region::case2));
  if (c3) out.applicable.emplace_back(Region::case3, m_rho_piece(n, rho, r, s, Region::case3));
  if (out.applicable.empty()) throw DomainError("no case of m_rho applies");
  out.value = out.applicable.front().second;
  out.region = out.applicable.front().first;
  for (const auto& [reg, v] : out.applicable)
    if (v != out.value) {
      out.value = std::min(out.value, v);
      out.region = Region::overlap_min;
    }
  return out;
}

/// L^p threshold for p in [2, infinity]: -n(1-rho)/2 - rho(n-1)/2 (1 - 1/p).
template <class S>
S yangwu_threshold(int n, S rho, Exponent<S> p) {
  detail::check_dim(n);
  detail::check_rho(rho);
  require(p.inv <= scalar<S>(1, 2), "the L^p threshold needs p >= 2");
  const S nn = scalar<S>(n);
  return -nn * (1 - rho) / 2 - rho * (nn - 1) / 2 * (1 - p.inv);
}

template <class S>
struct L1Threshold {
  S value{};
  S low_branch{};   // -n(1 - rho), used for rho <= 1/2
  S high_branch{};  // rho - (n + 1)/2, used for rho >= 1/2
  bool both_branches = false;
  S discrepancy{};  // high - low when both branches apply
};

template <class S>
L1Threshold<S> l1_threshold(int n, S rho) {
  detail::check_dim(n);
  detail::check_rho(rho);
  const S nn = scalar<S>(n);
  const S half = scalar<S>(1, 2);
  L1Threshold<S> t;
  t.low_branch = -nn * (1 - rho);
  t.high_branch = rho - (nn + 1) / 2;
  if (rho < half) {
    t.value = t.low_branch;
  } else if (rho > half) {
    t.value = t.high_branch;
  } else {
    t.both_branches = true;
    t.discrepancy = t.high_branch - t.low_branch;
    t.value = std::min(t.low_branch, t.high_branch);
  }
  return t;
}

/// Decay exponent of the localized near-diagonal pieces: m + n(1-rho)/r + (n-1)rho/2 + rho/r.
template <class S>
S tjb_exponent(int n, S rho, Exponent<S> r, S m) {
  detail::check_dim(n);
  const S nn = scalar<S>(n);
  return m + nn * (1 - rho) * r.inv + (nn - 1) * rho / 2 + rho * r.inv;
}

/// Decay exponent of the off-diagonal pieces: m + n - N rho.
template <class S>
S tja_exponent(int n, S rho, S m, int big_n) {
  detail::check_dim(n);
  return m + scalar<S>(n) - scalar<S>(big_n) * rho;
}

/// 1/p for p = 2s(1/2 + 1/s - 1/r), 2 <= r <= s.
template <class S>
Exponent<S> interp_p_upper(Exponent<S> r, Exponent<S> s) {
  const S half = scalar<S>(1, 2);
  require(r.inv <= half && s.inv <= r.inv, "upper interpolation needs 2 <= r <= s");
  const S denom = 1 + 2 * s.inv - 2 * r.inv;
  require(denom != scalar<S>(0), "degenerate upper interpolation");
  return Exponent<S>::reciprocal(s.inv / denom);
}

/// 1/p for p = 2(1/2 - 1/s) / (1/r - 1/s), s' <= r <= 2, r != s.
template <class S>
Exponent<S> interp_p_lower(Exponent<S> r, Exponent<S> s) {
  const S half = scalar<S>(1, 2);
  require(r.inv >= half && r.inv <= 1 - s.inv, "lower interpolation needs s' <= r <= 2");
  if (r.inv == s.inv) throw DomainError("lower interpolation formula divides by zero when r = s");
  const S num = 1 - 2 * s.inv;
  if (num == scalar<S>(0)) return Exponent<S>::infinity();
  return Exponent<S>::reciprocal((r.inv - s.inv) / num);
}

/// Signed area test: zero iff the three planar points are collinear.
template <class S>
S collinearity(S x0, S y0, S x1, S y1, S x2, S y2) {
  return (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0);
}

}  // namespace roughfio
