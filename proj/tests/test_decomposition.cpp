#include <gtest/gtest.h>

#include <random>

#include "roughfio/decomposition.hpp"

using namespace roughfio;

namespace {

template <int Dim>
Vec<Dim> random_vector(std::mt19937_64& rng, double max_radius) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec<Dim> v{};
  for (auto& c : v) c = n(rng);
  return (max_radius * u(rng) / norm<Dim>(v)) * v;
}

const Grid<2> kGrid(32, 2.0 * kPi);

}  // namespace

TEST(Partition, PlateauAndSupport) {
  const LPPartition p;
  EXPECT_DOUBLE_EQ(p.psi<2>(3, {8.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(p.psi<2>(0, {0.0, 0.0}), 1.0);
  for (int j = 1; j <= 10; ++j) {
    EXPECT_EQ(p.psi_radial(j, std::ldexp(1.0, j + 1)), 0.0);
    EXPECT_EQ(p.psi_radial(j, std::ldexp(1.0, j + 1) * 1.5), 0.0);
    EXPECT_EQ(p.psi_radial(j, std::ldexp(1.0, j - 1) * 0.99), 0.0);
  }
  EXPECT_THROW(p.psi_radial(-1, 1.0), DomainError);
}

TEST(Partition, SumsToOne) {
  const LPPartition p;
  std::mt19937_64 rng(1);
  for (int k = 0; k < 4096; ++k) {
    const auto xi = random_vector<2>(rng, 16.0);
    double s = 0.0;
    for (int j = 0; j <= 5; ++j) s += p.psi<2>(j, xi);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Net, OneDimensionalIsPlusMinusOne) {
  for (int j : {1, 4, 9})
    for (double rho : {0.0, 0.5, 1.0}) {
      const auto net = build_angular_net<1>(j, rho);
      ASSERT_EQ(net.size(), 2u);
      EXPECT_EQ(net.directions[0][0] * net.directions[1][0], -1.0);
    }
}

TEST(Net, RhoZeroIndependentOfLevel) {
  const auto a = build_angular_net<2>(1, 0.0), b = build_angular_net<2>(7, 0.0);
  EXPECT_EQ(a.directions, b.directions);
  EXPECT_DOUBLE_EQ(a.delta, 1.0);
}

TEST(Net, RejectsLevelZero) { EXPECT_THROW(build_angular_net<2>(0, 1.0), DomainError); }

TEST(Net, CertificatesInTwoAndThreeDimensions) {
  for (double rho : {0.5, 1.0})
    for (int j : {2, 5}) {
      const auto c2 = verify_net(build_angular_net<2>(j, rho));
      EXPECT_TRUE(c2.separated && c2.covering_ok) << "n=2 j=" << j;
      const auto c3 = verify_net(build_angular_net<3>(j, rho), 20000);
      EXPECT_TRUE(c3.separated && c3.covering_ok) << "n=3 j=" << j;
    }
}

TEST(Net, FramesMapDirectionToFirstAxis) {
  const auto net = build_angular_net<3>(4, 1.0);
  for (std::size_t nu = 0; nu < net.size(); nu += 5) {
    const Eigen::Vector3d e = net.frames[nu] * to_eigen<3>(net.directions[nu]);
    EXPECT_NEAR(e(0), 1.0, 1e-12);
    EXPECT_NEAR(e.tail<2>().norm(), 0.0, 1e-12);
    EXPECT_NEAR((net.frames[nu] * net.frames[nu].transpose() - Mat<3>::Identity()).norm(), 0.0, 1e-12);
  }
}

TEST(Net, RemovingADirectionBreaksCovering) {
  auto net = build_angular_net<2>(6, 1.0);
  net.directions.erase(net.directions.begin() + 3);
  net.frames.erase(net.frames.begin() + 3);
  EXPECT_FALSE(verify_net(net).covering_ok);
}

TEST(Eta, PartitionOfUnity) {
  std::mt19937_64 rng(2);
  for (int j : {1, 4, 8}) {
    const auto n2 = build_angular_net<2>(j, 1.0);
    const auto n3 = build_angular_net<3>(j, 0.5);
    for (int k = 0; k < 500; ++k) {
      double s2 = 0.0, s3 = 0.0;
      for (const auto& [nu, w] : eta_weights(n2, random_vector<2>(rng, 5.0) + Vec<2>{1e-3, 0.0})) s2 += w;
      for (const auto& [nu, w] : eta_weights(n3, random_vector<3>(rng, 5.0) + Vec<3>{0.0, 1e-3, 0.0})) s3 += w;
      EXPECT_NEAR(s2, 1.0, 1e-12);
      EXPECT_NEAR(s3, 1.0, 1e-12);
    }
  }
  const auto net = build_angular_net<2>(3, 1.0);
  EXPECT_THROW(eta_weights(net, Vec<2>{0.0, 0.0}), DomainError);
}

TEST(Eta, SupportedNearItsDirection) {
  const auto net = build_angular_net<2>(6, 1.0);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const auto xi = random_vector<2>(rng, 3.0) + Vec<2>{0.0, 1e-3};
    const Vec<2> u = (1.0 / norm<2>(xi)) * xi;
    for (const auto& [nu, w] : eta_weights(net, xi)) EXPECT_LE(norm<2>(u - net.directions[nu]), 1.5 * net.delta);
  }
}

TEST(BSymbol, TrivialSymbolIsACutoff) {
  const auto a = amplitude_power<2>(0.0, 1.0, [](const Vec<2>&) { return Complex{1.0, 0.0}; }, kGrid);
  const auto phi = Phase<2>::from_theta([](const Vec<2>&, const Vec<2>&) { return 0.0; },
                                        [](const Vec<2>&, const Vec<2>&) { return Vec<2>{}; });
  const LPPartition part;
  const int j = 3;
  const auto net = build_angular_net<2>(j, 1.0);
  const std::size_t nu = 2;
  const auto b = b_symbol(a, phi, part, net, j, nu);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 500; ++k) {
    const auto xi = random_vector<2>(rng, 5.0) + Vec<2>{1e-3, 0.0};
    const Complex v = b({0.0, 0.0}, xi);
    const double expect = part.psi_radial(1, 2.0 * norm<2>(xi)) * eta(net, nu, xi);
    EXPECT_NEAR(std::abs(v - expect), 0.0, 1e-14);
    EXPECT_LE(std::abs(v), 1.0 + 1e-15);
  }
  // Outside the sector.
  EXPECT_EQ(b({0.0, 0.0}, (-1.0) * net.directions[nu]), Complex(0.0, 0.0));
}

TEST(GWeight, Examples) {
  const auto net = build_angular_net<2>(2, 1.0);
  EXPECT_DOUBLE_EQ(g_weight(net, 2, 0, 1.0, Vec<2>{0.0, 0.0}), 1.0);
  for (std::size_t nu = 0; nu < net.size(); ++nu)
    EXPECT_NEAR(g_weight(net, 2, nu, 1.0, net.directions[nu]), 17.0, 1e-12);
}
