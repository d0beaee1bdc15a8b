#include <gtest/gtest.h>

#include <random>

#include "roughfio/engine.hpp"
#include "roughfio/maximal.hpp"
#include "roughfio/sparse.hpp"

using namespace roughfio;

namespace {

template <int Dim>
SampledFunction<Dim> indicator(const Grid<Dim>& g, const DyadicCube<Dim>& q) {
  SampledFunction<Dim> f(g);
  for (auto k : q.lattice_points(g)) f[k] = 1.0;
  return f;
}

}  // namespace

TEST(Maximal, ConstantIsFixed) {
  const Grid<2> g(32, 4.0);
  const auto f = SampledFunction<2>::from_callable(g, [](const Vec<2>&) { return Complex{0.0, 3.0}; });
  for (double r : {1.0, 2.0, 2.5}) {
    const auto m = maximal(f, r);
    for (auto v : m.values) EXPECT_NEAR(v.real(), 3.0, 1e-12);
  }
  EXPECT_THROW(MaximalFunction<2>(f, 0.5), DomainError);
  EXPECT_THROW(MaximalFunction<2>(f, std::numeric_limits<double>::infinity()), DomainError);
}

TEST(Maximal, IndicatorOfUnitInterval) {
  // chi_[0,1] on a period-8 line, evaluated at x = 2: the best ball containing 2 is
  // [2 - 1 - h, 2 + ...]-type, giving roughly one half.
  const Grid<1> g(512, 8.0);
  const auto f = SampledFunction<1>::from_callable(g, [](const Vec<1>& x) { return x[0] <= 1.0 ? 1.0 : 0.0; });
  const auto m = maximal_at(f, 1.0, {static_cast<std::size_t>(128)});
  EXPECT_NEAR(m[0], 65.0 / 129.0, 1e-12);
}

TEST(Maximal, DominatesAndScales) {
  const Grid<2> g(64, 8.0);
  const auto f = random_band_limited(g, 6.0, 3);
  const auto m1 = maximal(f, 1.0);
  const auto m2 = maximal(f, 2.0);
  const auto m2s = maximal(f.scaled(2.0), 2.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_GE(m1[k].real(), std::abs(f[k]) - 1e-15);
    EXPECT_GE(m2[k].real(), m1[k].real() * (1.0 - 1e-12));
    EXPECT_NEAR(m2s[k].real(), 2.0 * m2[k].real(), 1e-12);
  }
}

TEST(Localized, PieceOutsideCubeIsFlagged) {
  const Grid<2> g(32, 4.0);
  const auto f = random_band_limited(g, 4.0, 5);
  const DyadicCube<2> q{1, {0, 0}};
  std::vector<std::size_t> probes;
  for (std::size_t k = 0; k < g.size(); k += 3) probes.push_back(k);
  // Identity restricted to the cube: support fine.
  const LocalizedPiece<2> inside = [](const SampledFunction<2>& h, const std::vector<std::size_t>& p) {
    std::vector<Complex> out;
    for (auto k : p) out.push_back(h[k]);
    return out;
  };
  const auto ok = check_localized_hypothesis<2>({inside}, f, {q}, 2.0, probes);
  EXPECT_FALSE(ok.violation);
  EXPECT_TRUE(ok.support_ok[0]);
  // Output everywhere: leaks outside Q.
  const LocalizedPiece<2> leak = [](const SampledFunction<2>&, const std::vector<std::size_t>& p) {
    return std::vector<Complex>(p.size(), Complex{1.0, 0.0});
  };
  const auto bad = check_localized_hypothesis<2>({leak}, f, {q}, 2.0, probes);
  EXPECT_TRUE(bad.violation);
  EXPECT_FALSE(bad.support_ok[0]);
}

TEST(SparseBuilder, SingleCubeForIndicator) {
  const Grid<2> g(32, 4.0);
  const DyadicCube<2> q0{2, {1, 2}};
  const auto f = indicator(g, q0);
  const auto build = build_sparse_pointwise(f, f, 2.0, 0.5);
  ASSERT_EQ(build.collection.entries.size(), 1u);
  EXPECT_EQ(build.collection.entries[0].cube, q0);
  EXPECT_LE(build.constant, 1.0 + 1e-12);
  EXPECT_DOUBLE_EQ(check_sparse(build.collection, g).measured_eta, 1.0);
}

TEST(SparseBuilder, DisjointSupports) {
  const Grid<2> g(32, 4.0);
  const DyadicCube<2> a{2, {0, 0}}, b{3, {6, 5}};
  auto f = indicator(g, a);
  for (auto k : b.lattice_points(g)) f[k] = 2.0;
  const auto build = build_sparse_pointwise(f, f, 1.0, 0.5);
  EXPECT_EQ(build.collection.entries.size(), 2u);
  const auto check = check_sparse(build.collection, g);
  EXPECT_TRUE(check.valid());
  EXPECT_DOUBLE_EQ(check.measured_eta, 1.0);
}

TEST(SparseBuilder, EngineOutputIsSparseAndScaleInvariant) {
  const Grid<2> g(64, 16.0);
  const PiecewiseConstant<2> t(16.0, 4, 1.0, 2.0, 7);
  const auto a = amplitude_power<2>(-1.25, 1.0, [](const Vec<2>&) { return Complex{1.0, 0.0}; }, g,
                                    [](const Vec<2>&) { return std::uint64_t{0}; });
  const FioOperator<2> op(a, phase_archetype<2>(t, g), g);
  const auto f = random_band_limited(g, 6.0, 8);
  const auto tf = apply_fio_lattice(op, f);
  const auto b1 = build_sparse_pointwise(tf, f, 2.0, 0.5);
  const auto b2 = build_sparse_pointwise(tf.scaled(2.0), f.scaled(2.0), 2.0, 0.5);
  EXPECT_TRUE(verify_sparse(b1.collection, g));
  EXPECT_GE(check_sparse(b1.collection, g).measured_eta, 0.5);
  ASSERT_TRUE(std::isfinite(b1.constant));
  EXPECT_LE(std::max(b1.constant, b2.constant) / std::min(b1.constant, b2.constant), 2.0);
}

TEST(SparseCheck, NestedTower) {
  const Grid<2> g(32, 4.0);
  const DyadicCube<2> q{0, {0, 0}}, q1{1, {1, 0}}, q2{2, {2, 1}};
  SparseCollection<2> s;
  s.eta = 1.0 - 0.25;
  auto minus = [&](const DyadicCube<2>& outer, const DyadicCube<2>* inner) {
    std::vector<std::size_t> e;
    for (auto k : outer.lattice_points(g))
      if (!inner || !inner->contains_index(g.unflatten(k), 32)) e.push_back(k);
    return e;
  };
  s.entries.push_back({q, minus(q, &q1)});
  s.entries.push_back({q1, minus(q1, &q2)});
  s.entries.push_back({q2, minus(q2, nullptr)});
  const auto c = check_sparse(s, g);
  EXPECT_TRUE(c.valid());
  EXPECT_DOUBLE_EQ(c.measured_eta, 0.75);
}

TEST(SparseCheck, OverlappingWitnessesInvalid) {
  const Grid<2> g(16, 1.0);
  const DyadicCube<2> q{0, {0, 0}}, q1{1, {0, 0}};
  SparseCollection<2> s;
  s.eta = 0.1;
  s.entries.push_back({q, q.lattice_points(g)});
  s.entries.push_back({q1, q1.lattice_points(g)});
  EXPECT_FALSE(check_sparse(s, g).disjoint);
  EXPECT_FALSE(verify_sparse(s, g));
}

TEST(SparseCheck, EmptyCollection) {
  const Grid<2> g(16, 1.0);
  const SparseCollection<2> s;
  EXPECT_TRUE(verify_sparse(s, g));
  const SampledFunction<2> zero(g);
  const auto f = random_band_limited(g, 3.0, 1);
  EXPECT_EQ(verify_pointwise_domination(zero, s, f, 2.0), 0.0);
  EXPECT_TRUE(std::isinf(verify_pointwise_domination(f, s, f, 2.0)));
}

TEST(SparseForm, IdentityAndZero) {
  const Grid<2> g(32, 4.0);
  const DyadicCube<2> q{2, {1, 1}};
  const auto f = indicator(g, q);
  SparseCollection<2> s;
  s.entries.push_back({q, q.lattice_points(g)});
  const auto c = verify_form_domination(f, f, f, 1.0, 1.0, s);
  const double vol = std::pow(q.side(4.0), 2);
  EXPECT_NEAR(c.pairing, vol, 1e-12);
  EXPECT_NEAR(c.form, vol, 1e-12);
  EXPECT_NEAR(c.constant, 1.0, 1e-12);
  const SampledFunction<2> zero(g);
  EXPECT_EQ(verify_form_domination(f, f, zero, 1.0, 1.0, s).pairing, 0.0);
  // Zero form with a non-zero pairing.
  EXPECT_TRUE(std::isinf(verify_form_domination(f, f, f, 1.0, 1.0, SparseCollection<2>{}).constant));
}
