#include <gtest/gtest.h>

#include <random>

#include "roughfio/exponents.hpp"

using namespace roughfio;

namespace {

using Q = Rational;
using E = Exponent<Q>;

E inv(Q v) { return E::reciprocal(v); }

// Corner labels of the (1/r, 1/s') diagram, written out independently.
Q label_11(int n, Q rho) { return -Q(n) * (1 - rho) - Q(n + 1) * rho / 2; }
Q label_h1(int n, Q) { return -Q(n) / 2; }
Q label_hh(int n, Q rho) { return -Q(n) * (1 - rho) / 2 - Q(n - 1) * rho / 4; }
Q label_01(int n, Q rho) { return -Q(n) * (1 - rho) / 2 - Q(n - 1) * rho / 2; }
Q label_10(int n, Q rho) { return rho <= Q(1, 2) ? -Q(n) * (1 - rho) : rho - Q(n + 1) / 2; }

// (1/r, 1/s') -> m_rho
Q at(int n, Q rho, Q a, Q sd) { return m_rho<Q>(n, rho, inv(a), inv(1 - sd)).value; }

}  // namespace

TEST(PointwiseThreshold, Examples) {
  EXPECT_EQ(pointwise_threshold<Q>(2, Q(1), E::of(Q(2))), Q(-1));
  EXPECT_EQ(pointwise_threshold<Q>(1, Q(0), E::of(Q(1))), Q(-1));
  EXPECT_EQ(pointwise_threshold<Q>(3, Q(1), E::of(Q(1))), Q(-2));
  EXPECT_THROW(pointwise_threshold<Q>(2, Q(1), E::of(Q(3))), DomainError);
  EXPECT_DOUBLE_EQ(pointwise_threshold<double>(2, 1.0, Exponent<double>::of(2.0)), -1.0);
}

TEST(MRho, Examples) {
  EXPECT_EQ(m_rho<Q>(2, Q(1), E::of(Q(2)), E::of(Q(2))).value, Q(-1, 4));
  EXPECT_EQ(m_rho<Q>(2, Q(1), E::of(Q(2)), E::infinity()).value, Q(-1));
  EXPECT_EQ(m_rho<Q>(2, Q(1, 2), E::of(Q(1)), E::of(Q(1))).value, Q(-1));
  EXPECT_THROW(m_rho<Q>(2, Q(1), E::of(Q(3)), E::of(Q(2))), DomainError);
  EXPECT_THROW(m_rho<Q>(2, Q(0), E::of(Q(2)), E::of(Q(2))), DomainError);
}

TEST(MRho, CornersForSmallRho) {
  for (int n = 1; n <= 3; ++n)
    for (Q rho : {Q(3, 10), Q(1, 2)}) {
      EXPECT_EQ(at(n, rho, Q(1), Q(1)), label_11(n, rho));
      EXPECT_EQ(at(n, rho, Q(1, 2), Q(1)), label_h1(n, rho));
      EXPECT_EQ(at(n, rho, Q(1, 2), Q(1, 2)), label_hh(n, rho));
      EXPECT_EQ(at(n, rho, Q(0), Q(1)), label_01(n, rho));
      EXPECT_EQ(at(n, rho, Q(1), Q(0)), label_10(n, rho));
    }
}

TEST(MRho, CornersForLargeRho) {
  for (int n = 1; n <= 3; ++n)
    for (Q rho : {Q(7, 10), Q(1)}) {
      EXPECT_EQ(at(n, rho, Q(1), Q(1)), label_11(n, rho));
      EXPECT_EQ(at(n, rho, Q(1, 2), Q(1)), label_h1(n, rho));
      EXPECT_EQ(at(n, rho, Q(1, 2), Q(1, 2)), label_hh(n, rho));
      EXPECT_EQ(at(n, rho, Q(0), Q(1)), label_01(n, rho));
      // Corner (1, 0): case-3 value against the label.
      const Q case3 = Q(n) * rho / 2 + rho - Q(n) - Q(1, 2);
      EXPECT_EQ(at(n, rho, Q(1), Q(0)), case3);
      EXPECT_EQ(case3 == label_10(n, rho), rho == Q(1));
    }
}

TEST(MRho, ContinuousAcrossRTwo) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(1, 64);
  for (int k = 0; k < 100; ++k) {
    const int n = 1 + k % 3;
    const Q rho(pick(rng), 64);
    const Q b(pick(rng) - 1, 126);  // 1/s in [0, 1/2]
    const Q one = m_rho_piece<Q>(n, rho, inv(Q(1, 2)), inv(b), Region::case1);
    const Q two = m_rho_piece<Q>(n, rho, inv(Q(1, 2)), inv(b), Region::case2);
    EXPECT_EQ(one, two);
    EXPECT_EQ(m_rho<Q>(n, rho, inv(Q(1, 2)), inv(b)).value, one);
  }
}

TEST(MRho, OverlapTakesMinimum) {
  // s = r' with rho > 1/2: cases 2 and 3 both apply and differ.
  const auto res = m_rho<Q>(2, Q(3, 4), inv(Q(3, 4)), inv(Q(1, 4)));
  EXPECT_EQ(res.region, Region::overlap_min);
  ASSERT_EQ(res.applicable.size(), 2u);
  EXPECT_EQ(res.value, std::min(res.applicable[0].second, res.applicable[1].second));
  // Gap (1/r - 1/2) n (1 - rho).
  EXPECT_EQ(boost::abs(res.applicable[1].second - res.applicable[0].second), Q(1, 4) * Q(2) * Q(1, 4));
}

TEST(MRho, NonIncreasingInInverseR) {
  for (int n = 1; n <= 3; ++n)
    for (Q rho : {Q(1, 5), Q(1, 2), Q(4, 5), Q(1)})
      for (Region r : {Region::case1, Region::case2, Region::case3}) EXPECT_LE(m_rho_gradient<Q>(n, rho, r).first, Q(0));
}

TEST(YangWu, Examples) {
  EXPECT_EQ(yangwu_threshold<Q>(2, Q(1), E::of(Q(2))), Q(-1, 4));
  EXPECT_EQ(yangwu_threshold<Q>(2, Q(1), E::infinity()), Q(-1, 2));
  EXPECT_EQ(yangwu_threshold<Q>(2, Q(0), E::of(Q(2))), Q(-1));
  EXPECT_THROW(yangwu_threshold<Q>(2, Q(1), E::of(Q(3, 2))), DomainError);
}

TEST(L1Threshold, Examples) {
  EXPECT_EQ(l1_threshold<Q>(2, Q(1)).value, Q(-1, 2));
  EXPECT_EQ(l1_threshold<Q>(2, Q(0)).value, Q(-2));
  for (Q rho : {Q(1, 5), Q(1, 2)}) EXPECT_EQ(l1_threshold<Q>(2, rho).low_branch, m_rho<Q>(2, rho, E::of(Q(1)), E::of(Q(1))).value);
  const auto half = l1_threshold<Q>(3, Q(1, 2));
  EXPECT_TRUE(half.both_branches);
  EXPECT_EQ(half.low_branch, Q(-3, 2));
  EXPECT_EQ(half.high_branch, Q(-3, 2));
  EXPECT_EQ(half.discrepancy, Q(0));
}

TEST(DecayExponents, Examples) {
  EXPECT_EQ(tjb_exponent<Q>(2, Q(1), E::of(Q(2)), Q(-5, 4)), Q(-1, 4));
  EXPECT_EQ(tja_exponent<Q>(2, Q(1), Q(0), 3), Q(-1));
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pick(0, 60);
  for (int k = 0; k < 200; ++k) {
    const int n = 1 + k % 3;
    const Q rho(pick(rng), 60), r_inv = Q(1, 2) + Q(pick(rng), 120);
    const Q thr = pointwise_threshold<Q>(n, rho, inv(r_inv));
    EXPECT_EQ(tjb_exponent<Q>(n, rho, inv(r_inv), thr), Q(0));
    const Q m = thr + Q(pick(rng) - 30, 17);
    EXPECT_EQ(tjb_exponent<Q>(n, rho, inv(r_inv), m) < Q(0), m < thr);
  }
}

TEST(Interpolation, Examples) {
  const auto up = interp_p_upper<Q>(E::of(Q(3)), E::of(Q(4)));
  EXPECT_EQ(up.inv, Q(3, 10));
  EXPECT_EQ(collinearity<Q>(Q(3, 10), Q(7, 10), Q(1, 2), Q(1), Q(1, 3), Q(3, 4)), Q(0));
  EXPECT_EQ(interp_p_upper<Q>(E::of(Q(2)), E::of(Q(2))).inv, Q(1, 2));
  const auto lo = interp_p_lower<Q>(E::of(Q(4, 3)), E::of(Q(4)));
  EXPECT_EQ(lo.inv, Q(1));
  EXPECT_EQ(collinearity<Q>(Q(1), Q(1), Q(1, 2), Q(1, 2), Q(3, 4), Q(3, 4)), Q(0));
  EXPECT_THROW(interp_p_lower<Q>(E::of(Q(3, 2)), E::of(Q(3, 2))), DomainError);
}

TEST(Interpolation, CollinearOnRandomInputs) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  using D = Exponent<double>;
  int upper = 0, lower = 0;
  while (upper < 100 || lower < 100) {
    const double a = u(rng), b = u(rng) * a;  // 1/s <= 1/r
    if (a <= 0.5 && upper < 100 && a - b > 1e-3) {
      const double p = interp_p_upper<double>(D::reciprocal(a), D::reciprocal(b)).inv;
      EXPECT_LE(std::abs(collinearity(p, 1.0 - p, 0.5, 1.0, a, 1.0 - b)), 1e-12);
      ++upper;
    }
    if (a >= 0.5 && a <= 1.0 - b && lower < 100 && a - b > 1e-3) {
      const double p = interp_p_lower<double>(D::reciprocal(a), D::reciprocal(b)).inv;
      EXPECT_LE(std::abs(collinearity(p, 1.0, 0.5, 0.5, a, 1.0 - b)), 1e-12);
      ++lower;
    }
  }
}
