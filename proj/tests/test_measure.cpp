#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cantor/measure.hpp"

using namespace cantor;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST(CubeMass, FullRetentionIsLebesgue) {
  const auto p = ConstructionParams::uniform(2, 3, 9, 3);
  const auto r = build_realization(p, SelectionRule::uniform_subset(), 1);
  const NaturalMeasure mu(r);
  for (int k = 0; k <= 3; ++k) {
    for (const auto& q : r.level(k)) EXPECT_EQ(measure_of_cube(mu, q), Rational(1, std::int64_t(std::pow(9, k))));
  }
}

TEST(CubeMass, E22FirstLevelAndMissingCubes) {
  const auto p = ConstructionParams::uniform(2, 2, 2, 4);
  const auto r = build_realization(p, SelectionRule::column_lr(), 3);
  const NaturalMeasure mu(r);
  for (const auto& q : r.level(1)) EXPECT_EQ(measure_of_cube(mu, q), Rational(1, 2));
  // the level-1 column not chosen
  CubeAddress missing = r.level(1)[0];
  missing.index[0] = 1 - missing.index[0];
  EXPECT_EQ(measure_of_cube(mu, missing), Rational(0));
}

TEST(CubeMass, BeyondDepthThrows) {
  const auto p = ConstructionParams::uniform(2, 2, 2, 4);
  const auto r = build_realization(p, SelectionRule::uniform_subset(), 3);
  const NaturalMeasure mu(r, 2);
  EXPECT_THROW(measure_of_cube(mu, r.level(3)[0]), DomainError);
  EXPECT_THROW(NaturalMeasure(r, 5), DomainError);
}

TEST(CubeMass, NormalizationAndAdditivity) {
  const auto p = ConstructionParams::periodic(3, {{2, 4}, {3, 5}}, 4);
  const auto r = build_realization(p, SelectionRule::uniform_subset(), 10);
  const NaturalMeasure mu(r);
  for (int k = 0; k <= r.depth(); ++k) EXPECT_EQ(total_mass(mu, k), Rational(1));
  for (int k = 0; k < r.depth(); ++k) {
    for (std::size_t i = 0; i < r.level(k).size(); ++i) {
      const auto [lo, hi] = r.child_range(k, i);
      Rational sum(0);
      for (std::size_t c = lo; c < hi; ++c) sum += measure_of_cube(mu, r.level(k + 1)[c]);
      ASSERT_EQ(sum, measure_of_cube(mu, r.level(k)[i]));
    }
  }
}

TEST(Ball, CoveringRadiusGivesTotalMass) {
  const auto r = build_realization(ConstructionParams::uniform(2, 2, 2, 8), SelectionRule::uniform_subset(), 4);
  const NaturalMeasure mu(r);
  const auto b = measure_of_ball(mu, v2(0.3, 0.9), std::sqrt(2.0) + 0.01);
  EXPECT_DOUBLE_EQ(b.lower, 1.0);
  EXPECT_DOUBLE_EQ(b.upper, 1.0);
}

TEST(Ball, LebesgueDisc) {
  const auto r = build_realization(ConstructionParams::uniform(2, 2, 4, 7), SelectionRule::uniform_subset(), 1);
  const NaturalMeasure mu(r);
  for (double rad : {0.05, 0.1, 0.2}) {
    const auto b = measure_of_ball(mu, v2(0.5, 0.5), rad);
    const double area = std::numbers::pi * rad * rad;
    EXPECT_LE(b.lower, area + 1e-12);
    EXPECT_GE(b.upper, area - 1e-12);
    // boundary cubes: an annulus of width √2 r_7
    EXPECT_NEAR(b.estimate, area, 2.0 * std::numbers::pi * rad * std::sqrt(2.0) / 128.0 * 0.25);
  }
}

TEST(Ball, MonotoneInRadius) {
  const auto r = build_realization(ConstructionParams::uniform(2, 2, 2, 10), SelectionRule::uniform_subset(), 17);
  const NaturalMeasure mu(r);
  const Vec x = v2(0.41, 0.63);
  BallMeasure prev;
  for (double rad = 1.0 / 1024; rad < 1.5; rad *= 1.3) {
    const auto b = measure_of_ball(mu, x, rad);
    EXPECT_LE(b.lower, b.estimate + 1e-15);
    EXPECT_LE(b.estimate, b.upper + 1e-15);
    EXPECT_GE(b.lower, prev.lower - 1e-15);
    EXPECT_GE(b.estimate, prev.estimate - 1e-15);
    EXPECT_GE(b.upper, prev.upper - 1e-15);
    prev = b;
  }
}

TEST(Ball, ResolutionGuard) {
  const auto r = build_realization(ConstructionParams::uniform(2, 2, 2, 4), SelectionRule::uniform_subset(), 1);
  const NaturalMeasure mu(r);
  EXPECT_THROW(measure_of_ball(mu, v2(0.5, 0.5), 1.0 / 32), DomainError);
  EXPECT_THROW(measure_of_ball(mu, v2(0.5, 0.5), 0.0), DomainError);
  EXPECT_NO_THROW(measure_of_ball(mu, v2(0.5, 0.5), 1.0 / 16));
}

TEST(Ahlfors, LebesgueSpreadSmall) {
  const auto r = build_realization(ConstructionParams::uniform(2, 2, 4, 7), SelectionRule::uniform_subset(), 1);
  const NaturalMeasure mu(r);
  const auto scan = ahlfors_ratio_scan(mu, 50, {0.25, 0.125, 0.0625, 0.03125}, 3, 2.0);
  EXPECT_LE(scan.spread(), 4.0);
  EXPECT_GT(scan.min_ratio, 0.0);
}

TEST(Ahlfors, DegenerateScan) {
  const auto r = build_realization(ConstructionParams::uniform(2, 2, 2, 6), SelectionRule::uniform_subset(), 1);
  const NaturalMeasure mu(r);
  const auto scan = ahlfors_ratio_scan(mu, 1, {0.125}, 3);
  EXPECT_DOUBLE_EQ(scan.min_ratio, scan.max_ratio);
  EXPECT_THROW(ahlfors_ratio_scan(mu, 5, {}, 3), DomainError);
}

TEST(Ahlfors, BracketsContainEstimate) {
  const auto r = build_realization(ConstructionParams::uniform(2, 2, 2, 10), SelectionRule::uniform_subset(), 8);
  const NaturalMeasure mu(r);
  const auto scan = ahlfors_ratio_scan(mu, 40, {0.25, 0.0625, 1.0 / 256}, 5);
  EXPECT_LE(scan.min_lower_ratio, scan.min_ratio);
  EXPECT_GE(scan.max_upper_ratio, scan.max_ratio);
  for (const auto& row : scan.rows) {
    EXPECT_LE(row.mass.lower, row.mass.estimate);
    EXPECT_LE(row.mass.estimate, row.mass.upper);
  }
}

TEST(Projection, ColumnAndDiagonalLaws) {
  const auto p = ConstructionParams::uniform(2, 2, 2, 10);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto e = build_realization(p, SelectionRule::column_lr(), seed);
    const auto f = build_realization(p, SelectionRule::diagonal_ld(), seed);
    for (int n = 0; n <= 10; ++n) {
      EXPECT_EQ(projection_measure(e, 1, n), Rational(1));
      EXPECT_LE(projection_measure(e, 0, n), n == 0 ? Rational(1) : Rational(1, 2));
      EXPECT_EQ(projection_measure(f, 0, n), Rational(1));
      EXPECT_EQ(projection_measure(f, 1, n), Rational(1));
    }
  }
}

TEST(Projection, OnlyInThePlane) {
  const auto r = build_realization(ConstructionParams::uniform(3, 2, 4, 2), SelectionRule::uniform_subset(), 1);
  EXPECT_THROW(projection_measure(r, 0), DomainError);
}

TEST(Projection, AlwaysLeftColumnIsASegment) {
  const auto r = build_realization(ConstructionParams::uniform(2, 2, 2, 9), SelectionRule::always_left(), 0);
  EXPECT_EQ(projection_measure(r, 0), Rational(1, 512));
  EXPECT_EQ(projection_measure(r, 1), Rational(1));
}
