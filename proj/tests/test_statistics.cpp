#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cantor/statistics.hpp"

using namespace cantor;

namespace {

ConstructionParams e22(int depth) { return ConstructionParams::uniform(2, 2, 2, depth); }

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

Flat diagonal() { return Flat::line(v2(0, 0), v2(1, 1)); }

// a line through the centre with an irrational-ish slope, in Γ_n for small n
Flat tilted() { return Flat::line(v2(0.5, 0.5), v2(1.0, 0.37)); }

}  // namespace

TEST(Summary, Basics) {
  const std::vector<double> xs{1, 2, 3, 4};
  const Summary s = summarize(xs);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.min, 1);
  EXPECT_DOUBLE_EQ(s.max, 4);
  EXPECT_NEAR(s.std_dev, std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_NEAR(s.std_error, s.std_dev / 2.0, 1e-12);
}

TEST(Constants, UnitBallAndStripCount) {
  EXPECT_DOUBLE_EQ(unit_ball_volume(1), 2.0);
  EXPECT_NEAR(unit_ball_volume(2), std::numbers::pi, 1e-12);
  EXPECT_NEAR(unit_ball_volume(3), 4.0 * std::numbers::pi / 3.0, 1e-12);
  EXPECT_NEAR(strip_count_constant(2, 1), 10.0 * (1.0 + 2.0 * std::sqrt(2.0)), 1e-12);
}

TEST(YStatistic, LevelZeroIsTheCubeSection) {
  const auto r = build_realization(e22(4), SelectionRule::uniform_subset(), 1);
  EXPECT_NEAR(y_statistic(r, diagonal(), 0), std::sqrt(2.0), 1e-12);
}

TEST(YStatistic, FullRetentionDepthInvariant) {
  const auto r = build_realization(ConstructionParams::uniform(2, 3, 9, 4), SelectionRule::uniform_subset(), 1);
  for (int n = 0; n <= 4; ++n) EXPECT_NEAR(y_statistic(r, tilted(), n), y_statistic(r, tilted(), 0), 1e-9);
}

// Both first-level outcomes of the column rule put one cube on the diagonal
// (the other touches it at a point), so Y_1 = (2·1/4)^{-1}·√2/2 = √2.
TEST(YStatistic, ColumnRuleDiagonalLevelOne) {
  for (std::uint64_t s = 0; s < 16; ++s) {
    const auto r = build_realization(e22(1), SelectionRule::column_lr(), s);
    double oracle = 0.0;
    for (const auto& q : r.level(1)) oracle += flat_cube_measure(diagonal(), cube_box(r.params(), q));
    EXPECT_NEAR(oracle, std::sqrt(2.0) / 2.0, 1e-12);
    EXPECT_NEAR(y_statistic(r, diagonal(), 1), oracle / 0.5, 1e-12);
  }
}

TEST(Sampler, MatchesExplicitExtension) {
  const auto p = e22(7);
  const auto prefix = build_realization(p.truncated(5), SelectionRule::uniform_subset(), 3);
  const ConditionalSampler sampler(p, prefix, tilted(), 6);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto full = extend_realization(prefix, p.truncated(6), s);
    EXPECT_NEAR(sampler.draw(s), y_statistic(full, tilted(), 6), 1e-12);
  }
}

TEST(Sampler, UnconditionalMatchesBuild) {
  const auto p = e22(6);
  const CubeAddress root = CubeAddress::root(2);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto r = build_realization(p, SelectionRule::uniform_subset(), s);
    EXPECT_NEAR(sampled_flat_measure(p, SelectionRule::uniform_subset(), {&root, 1}, tilted(), 6, s),
                realization_flat_measure(r, tilted(), 6), 1e-12);
  }
}

TEST(Martingale, FullRetentionZeroVariance) {
  const auto p = ConstructionParams::uniform(2, 2, 4, 4);
  const auto rep = martingale_check(p, SelectionRule::uniform_subset(), tilted(), 3, 1000, 9);
  EXPECT_TRUE(rep.passed);
  EXPECT_TRUE(rep.flags.at("zero_variance"));
  EXPECT_NEAR(rep.values.at("mean"), rep.values.at("y_previous"), 1e-12);
}

TEST(Martingale, E22DiagonalLevelTwo) {
  const auto rep = martingale_check(e22(2), SelectionRule::uniform_subset(), diagonal(), 2, 10000, 21);
  EXPECT_TRUE(rep.passed) << rep.values.at("gap_in_se");
  EXPECT_LE(rep.values.at("gap"), 4.0 * rep.values.at("std_error") + 1e-12);
}

TEST(Martingale, ManyLevelsAndPrefixes) {
  const auto p = e22(6);
  int passed = 0;
  int total = 0;
  for (int n = 1; n <= 6; ++n) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto rep = martingale_check(p, SelectionRule::uniform_subset(), tilted(), n, 4000, 100 * n + s);
      passed += rep.passed;
      ++total;
    }
  }
  // 4 SE per check: at most a rare miss
  EXPECT_GE(passed, total - 1);
}

TEST(Martingale, MissingFlatIsDegenerate) {
  const Flat far = Flat::line(v2(0, 3), v2(1, 0.2));
  const auto rep = martingale_check(e22(3), SelectionRule::uniform_subset(), far, 3, 1000, 1);
  EXPECT_TRUE(rep.passed);
  EXPECT_TRUE(rep.flags.at("degenerate"));
  EXPECT_DOUBLE_EQ(rep.summary.max, 0.0);
}

TEST(Martingale, TooFewTrials) {
  EXPECT_THROW(martingale_check(e22(2), SelectionRule::uniform_subset(), diagonal(), 2, 999, 1), DomainError);
}

TEST(Mgf, HypothesisGuard) {
  const auto p = e22(4);
  const auto prefix = build_realization(p.truncated(2), SelectionRule::uniform_subset(), 1);
  EXPECT_THROW(conditional_mgf_check(p, prefix, tilted(), 3, 100.0, 0.5, 1, 1000, 1), DomainError);
  EXPECT_THROW(conditional_mgf_check(p, prefix, tilted(), 3, 0.1, 1.5, 1, 1000, 1), DomainError);
  EXPECT_THROW(require_mgf_hypothesis(p, 3, 1, -1.0, 0.5), DomainError);
}

TEST(Mgf, SmallLambdaTrivial) {
  const auto p = e22(4);
  const auto prefix = build_realization(p.truncated(2), SelectionRule::uniform_subset(), 1);
  const auto rep = conditional_mgf_check(p, prefix, tilted(), 3, 1e-9, 1.0, 1, 1000, 1);
  EXPECT_TRUE(rep.passed);
  EXPECT_NEAR(rep.values.at("mgf_estimate"), 1.0, 1e-6);
  EXPECT_NEAR(rep.values.at("bound"), 1.0, 1e-6);
}

TEST(Mgf, FullRetention) {
  const auto p = ConstructionParams::uniform(2, 2, 4, 4);
  const auto prefix = build_realization(p.truncated(2), SelectionRule::uniform_subset(), 1);
  const double lambda = 0.5 / mgf_hypothesis_lhs(p, 3, 1, 1.0);
  const auto rep = conditional_mgf_check(p, prefix, tilted(), 3, lambda, 0.5, 1, 1000, 1);
  EXPECT_TRUE(rep.passed);
  EXPECT_NEAR(rep.values.at("mgf_estimate"), std::exp(lambda * rep.values.at("y_previous")), 1e-9);
}

TEST(Mgf, E22LevelThree) {
  const auto p = e22(3);
  const double lambda0 = 1.0;
  const double lambda = lambda0 / mgf_hypothesis_lhs(p, 3, 1, 1.0);
  const auto prefix = build_realization(p.truncated(2), SelectionRule::uniform_subset(), 5);
  const auto rep = conditional_mgf_check(p, prefix, tilted(), 3, lambda, lambda0, 1, 10000, 5);
  EXPECT_TRUE(rep.passed) << rep.values.at("mgf_estimate") << " vs " << rep.values.at("bound");
}

TEST(Concentration, DerivedConstantsForE22) {
  const auto cp = derive_concentration(e22(8), 0.8, 1);
  EXPECT_EQ(cp.n0, 1);
  EXPECT_NEAR(cp.eps_dim, 0.04, 1e-12);
  EXPECT_NEAR(cp.R0, std::sqrt(2.0) / (2.0 * std::pow(0.5, 1.8)), 1e-9);
  EXPECT_GT(cp.R, 2.0 * cp.R0 * cp.Cn0);
  EXPECT_GE(cp.Cn0, cp.Cn0_finite);
  EXPECT_LE(mgf_hypothesis_lhs(e22(8), 8, 1, cp.lambda), cp.lambda0);
  // the window inequalities hold from n0 on
  const double s = dimension_value(e22(8));
  for (int m = cp.n0; m <= 8; ++m) {
    const double r = std::pow(0.5, m);
    const double pm = std::pow(2.0, m);
    EXPECT_LE(std::pow(r, -cp.t - 4 * cp.eps_dim), std::pow(r, -s + cp.eps_dim) * (1 + 1e-12));
    EXPECT_LE(std::pow(r, -s + cp.eps_dim), pm * (1 + 1e-12));
    EXPECT_LE(pm, std::pow(r, -s - cp.eps_dim) * (1 + 1e-12));
  }
}

TEST(Concentration, Errors) {
  EXPECT_THROW(derive_concentration(e22(6), 1.0, 1), DomainError);
  EXPECT_THROW(derive_concentration(e22(6), 0.8, 2), DomainError);
  EXPECT_THROW(derive_concentration(e22(6), 0.8, 1, 0.05), DomainError);
}

TEST(Tail, VacuousThreshold) {
  const auto p = e22(6);
  const auto cp = derive_concentration(p, 0.8, 1);
  const auto rep = tail_probability_check(p, SelectionRule::uniform_subset(), tilted(), 4, cp, 500, 1);
  EXPECT_TRUE(rep.flags.at("vacuous"));
  EXPECT_DOUBLE_EQ(rep.values.at("frequency"), 0.0);
  EXPECT_TRUE(rep.passed);
  EXPECT_THROW(tail_probability_check(p, SelectionRule::uniform_subset(), tilted(), cp.n0, cp, 10, 1), DomainError);
}

TEST(Tail, FullRetentionMatchesDirectComparison) {
  const auto p = ConstructionParams::uniform(2, 2, 4, 4);
  ConcentrationParams cp;
  cp.t = 0.5;
  cp.k = 1;
  cp.eps_dim = 0.1;
  cp.n0 = 0;
  const double y = y_statistic(build_realization(p, SelectionRule::uniform_subset(), 0), tilted(), 3);
  for (double scale : {0.5, 2.0}) {
    cp.R = scale * y / std::pow(p.scale(3), cp.t - cp.k);
    const auto rep = tail_probability_check(p, SelectionRule::uniform_subset(), tilted(), 3, cp, 200, 1);
    EXPECT_DOUBLE_EQ(rep.values.at("frequency"), scale < 1.0 ? 1.0 : 0.0);
  }
}

TEST(Tail, TrendOnE22) {
  const auto p = e22(8);
  const auto cp = derive_concentration(p, 0.8, 1);
  const auto rep = tail_trend(p, SelectionRule::uniform_subset(), tilted(), {4, 5, 6, 7, 8}, cp, 2000, 3);
  EXPECT_TRUE(rep.passed);
  EXPECT_TRUE(rep.flags.at("nonincreasing"));
  EXPECT_EQ(rep.curves.at(0).rows.size(), 5u);
}

TEST(GoodEvents, HugeRCertifies) {
  const auto p = e22(4);
  auto cp = derive_concentration(p, 0.8, 1);
  const Net net = build_net(NetParams::standard(p, 4, 1), 2, 1);
  const auto rep = good_event_frequency(p, SelectionRule::uniform_subset(), net, 4, cp, 100, 1);
  EXPECT_DOUBLE_EQ(rep.values.at("frequency"), 1.0);
  EXPECT_TRUE(rep.passed);
  EXPECT_THROW(good_event_frequency(p, SelectionRule::uniform_subset(), net, 3, cp, 100, 1), DomainError);
}

TEST(GoodEvents, NondecreasingOnE22) {
  const auto p = e22(6);
  const auto cp = derive_concentration(p, 0.8, 1);
  double prev = 0.0;
  for (int n = 4; n <= 6; ++n) {
    const Net net = build_net(NetParams::standard(p, n, 1), 2, 1);
    const auto rep = good_event_frequency(p, SelectionRule::uniform_subset(), net, n, cp, 200, n);
    EXPECT_GE(rep.values.at("frequency") + 1e-12, prev);
    prev = rep.values.at("frequency");
  }
}

// With one member and no c_geom slack, G_n(W) fails exactly when the tail
// event for W occurs; both checks draw the same realizations per seed.
TEST(GoodEvents, SingleMemberIsTailComplement) {
  const auto p = e22(5);
  ConcentrationParams cp;
  cp.t = 0.8;
  cp.k = 1;
  cp.eps_dim = 0.04;
  cp.n0 = 0;
  cp.R = 1.2 / std::pow(p.scale(5), cp.t - cp.k);  // threshold Y > 1.2 is hit sometimes
  NetParams np = NetParams::standard(p, 5, 1);
  np.c_geom = 0.0;
  const Net net = Net::from_members(np, 2, 1, {tilted()});
  const auto good = good_event_frequency(p, SelectionRule::uniform_subset(), net, 5, cp, 2000, 77);
  const auto tail = tail_probability_check(p, SelectionRule::uniform_subset(), tilted(), 5, cp, 2000, 77);
  ASSERT_FALSE(good.flags.at("vacuous"));
  EXPECT_GT(tail.values.at("frequency"), 0.0);
  EXPECT_NEAR(good.values.at("frequency"), 1.0 - tail.values.at("frequency"), 1e-12);
}

TEST(TubeScan, ZeroExponentBoundedByOne) {
  const auto r = build_realization(e22(10), SelectionRule::uniform_subset(), 4);
  TubeScanOptions opt;
  opt.tubes_per_width = 300;
  opt.seed = 1;
  const auto rep = tube_sup_scan(r, 0.0, {0.5, 0.125, 1.0 / 64}, opt);
  EXPECT_LE(rep.values.at("max_ratio"), 1.0);
}

TEST(TubeScan, LebesgueSlabBound) {
  const auto r = build_realization(ConstructionParams::uniform(2, 2, 4, 7), SelectionRule::uniform_subset(), 1);
  TubeScanOptions opt;
  opt.tubes_per_width = 300;
  opt.seed = 2;
  const std::vector<double> widths{0.5, 0.25, 0.125, 0.0625, 1.0 / 32};
  const auto rep = tube_sup_scan(r, 0.5, widths, opt);
  // the outer approximation widens the tube by the cube diagonal
  for (const auto& row : rep.curves.at(0).rows) {
    const double w = row[0];
    EXPECT_LE(row[2], (std::sqrt(2.0) + 1.0) * (w + 2.0 * std::sqrt(2.0) / 128.0) + 1e-12);
  }
}

TEST(TubeScan, ForcedColumnGrows) {
  const auto r = build_realization(e22(12), SelectionRule::always_left(), 0);
  TubeScanOptions opt;
  opt.tubes_per_width = 500;
  opt.reference_width = 1.0 / 32;
  opt.seed = 3;
  std::vector<double> widths;
  for (int j = 3; j <= 10; ++j) widths.push_back(std::ldexp(1.0, -j));
  const auto rep = tube_sup_scan(r, 1.0, widths, opt);
  EXPECT_GE(rep.values.at("growth"), 4.0);
  EXPECT_FALSE(rep.passed);
}

TEST(TubeScan, ResolutionFlagAndErrors) {
  const auto r = build_realization(e22(4), SelectionRule::uniform_subset(), 4);
  TubeScanOptions opt;
  opt.tubes_per_width = 50;
  EXPECT_TRUE(tube_sup_scan(r, 0.5, {0.25, 1.0 / 32}, opt).flags.at("resolution-limited"));
  EXPECT_FALSE(tube_sup_scan(r, 0.5, {0.25, 1.0 / 8}, opt).flags.at("resolution-limited"));
  EXPECT_THROW(tube_sup_scan(r, 0.5, {}, opt), DomainError);
  EXPECT_THROW(tube_sup_scan(r, 0.5, {1.5}, opt), DomainError);
}

TEST(TubeScan, StrategyNames) {
  for (auto s : {TubeStrategy::Random, TubeStrategy::AxisParallel, TubeStrategy::ClusterPairs, TubeStrategy::Mixed}) {
    EXPECT_EQ(tube_strategy_from_string(to_string(s)), s);
  }
  EXPECT_FALSE(tube_strategy_from_string("greedy").has_value());
}

TEST(TubeScan, SeedReproducible) {
  const auto r = build_realization(e22(8), SelectionRule::uniform_subset(), 4);
  TubeScanOptions opt;
  opt.tubes_per_width = 200;
  opt.seed = 11;
  const auto a = tube_sup_scan(r, 0.8, {0.25, 0.0625, 1.0 / 128}, opt);
  opt.threads = 3;
  const auto b = tube_sup_scan(r, 0.8, {0.25, 0.0625, 1.0 / 128}, opt);
  EXPECT_EQ(a.curves.at(0).rows, b.curves.at(0).rows);
}

TEST(BoxDim, FullSquare) {
  // the +O(1) end cells bias coarse scales, so fit the fine ones
  const auto r = build_realization(ConstructionParams::uniform(2, 2, 4, 8), SelectionRule::uniform_subset(), 1);
  for (double phi : {0.0, 0.3, 1.1}) {
    EXPECT_NEAR(box_dimension_estimate(r, direction_line(phi), {5, 6, 7, 8}).slope, 1.0, 0.02);
  }
}

TEST(BoxDim, ColumnRuleVerticalIsExact) {
  const auto r = build_realization(e22(12), SelectionRule::column_lr(), 5);
  const auto b = box_dimension_estimate(r, direction_line(std::numbers::pi / 2), {4, 6, 8, 10});
  EXPECT_NEAR(b.slope, 1.0, 1e-12);
  for (const auto& [delta, count] : b.counts) EXPECT_EQ(double(count), std::round(1.0 / delta));
}

TEST(BoxDim, InsufficientScales) {
  const auto r = build_realization(e22(6), SelectionRule::uniform_subset(), 1);
  EXPECT_THROW(box_dimension_estimate(r, direction_line(0.2), {3, 4}), DomainError);
  EXPECT_THROW(box_dimension_estimate(r, direction_line(0.2), {3, 4, 9}), DomainError);
}

TEST(BoxDim, PlaneProjectionInThreeDimensions) {
  // E(3; 2, 4) has dimension 2; its projection onto a plane has box slope near 2
  const auto r = build_realization(ConstructionParams::uniform(3, 2, 4, 8), SelectionRule::uniform_subset(), 2);
  Mat b(3, 2);
  b << 1, 0, 0.3, 1, 0.2, 0.4;
  const auto est = box_dimension_estimate(r, Flat::through(Vec::Zero(3), b), {2, 3, 4, 5, 6});
  EXPECT_GT(est.slope, 1.6);
  EXPECT_LE(est.slope, 2.05);
}
