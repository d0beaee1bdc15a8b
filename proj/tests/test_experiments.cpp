#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "roughfio/experiments.hpp"

using namespace roughfio;

namespace {

ExperimentConfig small(const std::string& kind) {
  ExperimentConfig c;
  c.experiment = kind;
  c.N = 64;
  c.L = 2.0 * kPi;
  c.j_min = 1;
  c.j_max = 4;
  c.probes = 4;
  c.gradient_probes = 50;
  return c;
}

}  // namespace

TEST(Config, ParsesKeyValueLines) {
  std::istringstream in(
      "# comment\n[grid]\nn = 2\nN = 128 # trailing\nL = 2pi\nphase = \"halfwave\"\ns = inf\nk0 = true\n");
  const auto c = parse_config(in);
  EXPECT_EQ(c.n, 2);
  EXPECT_EQ(c.N, 128u);
  EXPECT_DOUBLE_EQ(c.L, 2.0 * kPi);
  EXPECT_EQ(c.phase, "halfwave");
  EXPECT_TRUE(std::isinf(c.s));
  EXPECT_TRUE(c.k0);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  ExperimentConfig c;
  EXPECT_THROW(set_config_value(c, "colour", "red"), DomainError);
  EXPECT_THROW(set_config_value(c, "N", "lots"), DomainError);
  std::istringstream in("just words\n");
  EXPECT_THROW(parse_config(in), DomainError);
}

TEST(Config, HashIsStableAndSensitive) {
  ExperimentConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.seed += 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, ValidationCatchesNyquist) {
  auto c = small("decay");
  c.j_max = 5;
  EXPECT_THROW(validate_config(c), DomainError);
  c.j_max = 4;
  EXPECT_NO_THROW(validate_config(c));
  c.phase = "nonsense";
  EXPECT_THROW(validate_config(c), DomainError);
}

TEST(Registry, AllArchetypesBuild) {
  const Grid<2> g(32, 2.0 * kPi);
  for (const auto& p : phase_names()) EXPECT_EQ(make_phase<2>(p, 1, 4, g).name, p);
  for (const auto& a : amplitude_names()) EXPECT_NO_THROW(make_amplitude<2>(a, -1.0, 1.0, 1, 4, g));
  EXPECT_THROW(make_phase<2>("spiral", 1, 4, g), DomainError);
}

TEST(Audit, DefaultSuitePasses) {
  for (int n : {1, 2, 3}) {
    auto c = small("audit");
    c.n = n;
    if (n == 3) {
      c.N = 32;
      c.j_max = 3;
    }
    const auto r = run_audit(c);
    for (const auto& rec : r.records) EXPECT_TRUE(rec.pass) << "n=" << n << " " << rec.audit;
  }
}

TEST(Audit, BrokenNetFailsCovering) {
  auto c = small("audit");
  c.break_net = true;
  const auto r = run_audit(c);
  for (const auto& rec : r.records)
    if (rec.audit == "net-covering") {
      EXPECT_FALSE(rec.pass);
    }
  EXPECT_FALSE(r.pass);
}

TEST(Audit, NonHomogeneousPhaseFails) {
  auto c = small("audit");
  c.phase = "quadratic";
  const auto r = run_audit(c);
  for (const auto& rec : r.records)
    if (rec.audit == "homogeneity") {
      EXPECT_FALSE(rec.pass);
    }
}

TEST(Decay, ZeroAmplitudeIsDegenerate) {
  auto c = small("decay");
  c.L = 16.0;
  c.j_max = 2;
  c.amplitude = "zero";
  const auto r = run_decay(c);
  EXPECT_TRUE(r.degenerate);
  for (const auto& s : r.series)
    for (double v : s.value) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(run_experiment(c).pass);
}

TEST(Domination, IdentityIsBoundedByOne) {
  auto c = small("domination");
  c.phase = "linear";
  c.m = 0.0;
  c.r = 1.0;
  const auto r = run_domination(c);
  EXPECT_LE(r.base.constant, 1.0 + 1e-6);
  EXPECT_GT(r.base.constant, 0.1);
  EXPECT_LE(r.scale_deviation, 1e-10);
}

TEST(Sparse, IdentityIndicatorHasUnitConstants) {
  auto c = small("sparse");
  c.phase = "linear";
  c.m = 0.0;
  c.r = 1.0;
  c.s = std::numeric_limits<double>::infinity();
  c.input = "cube";
  c.dual_input = "same";
  const auto r = run_sparse(c);
  EXPECT_DOUBLE_EQ(r.base.eta, 1.0);
  EXPECT_NEAR(r.base.c_form, 1.0, 1e-9);
  EXPECT_NEAR(r.base.c_pointwise, 1.0, 1e-9);
}

TEST(Sparse, RoughAmplitudeReportIsDeterministic) {
  auto c = small("sparse");
  c.amplitude = "power-rough";
  c.m = -0.5;
  c.N = 32;
  const auto a = run_experiment(c).report;
  const auto b = run_experiment(c).report;
  EXPECT_EQ(a["results"].dump(), b["results"].dump());
  EXPECT_EQ(a["config_hash"], b["config_hash"]);
}

TEST(Exponents, SurfaceCsv) {
  std::ostringstream os;
  write_exponent_surface(os, 2, Rational(1), 4);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "inv_r,inv_s_dual,m_rho,region");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 15);  // lattice points of the triangle a + c >= 1 at step 1/4
  const auto rep = exponent_discrepancies(2, Rational(7, 10));
  EXPECT_FALSE(rep["corner_1_0"]["agree"].get<bool>());
  EXPECT_EQ(rep["l1_threshold"]["as_printed_low_branch"].get<std::string>(), "3/5");
}

TEST(Reports, AtomicWrite) {
  const auto dir = std::filesystem::temp_directory_path() / "roughfio_test_reports";
  const auto path = (dir / "r.json").string();
  write_atomically(path, "{}\n");
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(text, "{}\n");
  EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove_all(dir);
}

TEST(Inputs, CubeLevelControlsSupport) {
  const Grid<2> g(64, 8.0);
  for (int level : {1, 3, 6}) {
    const auto f = make_input<2>("cube", g, 1.0, 0, level);
    std::size_t ones = 0;
    for (std::size_t k = 0; k < g.size(); ++k) ones += f[k] == Complex{1.0, 0.0};
    const std::size_t side = 64u >> level;
    EXPECT_EQ(ones, side * side) << "level " << level;
  }
  EXPECT_THROW(make_input<2>("cube", g, 1.0, 0, 7), DomainError);
  ExperimentConfig c;
  set_config_value(c, "cube_level", "4");
  EXPECT_EQ(c.cube_level, 4);
}
