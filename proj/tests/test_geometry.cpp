#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cantor/geometry.hpp"
#include "cantor/statistics.hpp"

using namespace cantor;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Box box(std::initializer_list<double> lo, std::initializer_list<double> hi) { return Box{vec(lo), vec(hi)}; }

}  // namespace

TEST(FlatCube, SquareDiagonalAndChord) {
  const Box q = Box::unit(2);
  EXPECT_NEAR(flat_cube_measure(Flat::line(vec({0, 0}), vec({1, 1})), q), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(flat_cube_measure(Flat::line(vec({0, 0.5}), vec({1, 0})), q), 1.0, 1e-12);
}

TEST(FlatCube, HexagonalSection) {
  const Flat w = Flat::hyperplane(vec({1, 1, 1}), 1.5);
  EXPECT_NEAR(flat_cube_measure(w, Box::unit(3)), 3.0 * std::sqrt(3.0) / 4.0, 1e-12);
  // d = 4 path: the central section of the 4-cube by x1+..+x4 = 2 has volume 2/√3 · ... check vs MC
  const Flat h4 = Flat::hyperplane(vec({1, 1, 1, 1}), 2.0);
  const double exact = flat_cube_measure(h4, Box::unit(4));
  const auto mc = detail::section_monte_carlo(h4, Box::unit(4), 1 << 20);
  EXPECT_NEAR(exact, mc.value, 5.0 * mc.std_error);
}

TEST(FlatCube, MissAndTouch) {
  EXPECT_DOUBLE_EQ(flat_cube_measure(Flat::line(vec({0, 2}), vec({1, 0.3})), Box::unit(2)), 0.0);
  // a line through a single vertex has measure zero
  EXPECT_NEAR(flat_cube_measure(Flat::line(vec({1, 1}), vec({1, -1})), Box::unit(2)), 0.0, 1e-12);
}

TEST(FlatCube, DegenerateBasisRejected) {
  Mat b(3, 2);
  b << 1, 2, 0, 0, 1, 2;
  EXPECT_THROW(Flat::through(vec({0, 0, 0}), b), DomainError);
  EXPECT_THROW(Flat::line(vec({0, 0}), vec({0, 0})), DomainError);
}

TEST(FlatCube, GeneralFlatUsesMonteCarlo) {
  Mat b(4, 2);
  b << 1, 0, 1, 1, 0, 1, 1, -1;
  const Flat w = Flat::through(vec({0.5, 0.5, 0.5, 0.5}), b);
  const auto s = flat_box_section(w, Box::unit(4));
  EXPECT_FALSE(s.exact);
  EXPECT_GT(s.std_error, 0.0);
  EXPECT_GT(s.value, 0.0);
}

TEST(FlatCube, AgreesWithHitOrMissOracle) {
  SplitMix64 rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 2 + trial % 2;
    const int m = d == 2 ? 1 : 1 + (trial / 2) % 2;
    Box q{Vec(d), Vec(d)};
    Vec x(d);
    for (int i = 0; i < d; ++i) {
      q.lo[i] = 0.3 * rng.uniform();
      q.hi[i] = q.lo[i] + 0.2 + 0.5 * rng.uniform();
      x[i] = rng.uniform(q.lo[i], q.hi[i]);
    }
    const Flat w = random_gamma_flat(d, m, x, 0.0, rng);
    const auto mc = detail::section_monte_carlo(w, q, 1 << 16);
    EXPECT_NEAR(flat_cube_measure(w, q), mc.value, 5.0 * mc.std_error + 1e-12);
  }
}

TEST(Angle, Examples) {
  EXPECT_NEAR(plane_angle(coordinate_hyperplane(3, 2), Flat::line(vec({0, 0, 0}), vec({0, 0, 1}))),
              std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(plane_angle(coordinate_hyperplane(3, 2), Flat::line(vec({0, 0, 0}), vec({1, 2, 0}))), 0.0, 1e-12);
  EXPECT_NEAR(plane_angle(coordinate_hyperplane(2, 1), Flat::line(vec({0.3, 0.3}), vec({1, 1}))),
              std::numbers::pi / 4, 1e-12);
  EXPECT_THROW(plane_angle(Flat::line(vec({0, 0, 0}), vec({1, 0, 0})), Flat::line(vec({0, 0, 0}), vec({0, 1, 0}))),
               DomainError);
}

TEST(Angle, TranslationInvariant) {
  const Flat h = Flat::hyperplane(vec({1, 2, -1}), 0.3);
  Mat b(3, 2);
  b << 1, 0, 0.5, 1, 0, 2;
  const Flat w1 = Flat::through(vec({0, 0, 0}), b);
  const Flat w2 = Flat::through(vec({4, -1, 2}), b);
  EXPECT_NEAR(plane_angle(h, w1), plane_angle(h, w2), 1e-14);
}

// θ(H, W) is the angle between H and the direction of W farthest from H,
// i.e. max over unit u ∈ W of asin |u·ν|.
TEST(Angle, ClosedFormMatchesSampledMaximum) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 3;
    const int m = 1 + trial % 2;
    Vec nrm(d);
    for (int i = 0; i < d; ++i) nrm[i] = rng.normal();
    const Flat h = Flat::hyperplane(nrm, 0.0);
    Mat b(d, m);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < m; ++j) b(i, j) = rng.normal();
    const Flat w = Flat::through(Vec::Zero(d), b);
    double best = 0.0;
    for (int s = 0; s < 4000; ++s) {
      Vec c(m);
      if (m == 1) {
        c[0] = 1.0;
      } else {
        const double phi = std::numbers::pi * s / 4000.0;
        c << std::cos(phi), std::sin(phi);
      }
      const Vec u = w.basis() * c;
      best = std::max(best, std::asin(std::min(1.0, std::abs(u.dot(h.normal())))));
    }
    EXPECT_NEAR(plane_angle(h, w), best, 1e-5);
  }
}

TEST(Gamma, Membership) {
  const auto p = ConstructionParams::uniform(2, 2, 2, 6);
  EXPECT_FALSE(gamma_membership(Flat::line(vec({0, 0.5}), vec({1, 0})), p, 6));
  for (int n = 1; n <= 6; ++n) EXPECT_TRUE(gamma_membership(Flat::line(vec({0, 0}), vec({1, 1})), p, n));
  const Flat shallow = Flat::line(vec({0, 0.5}), vec({std::cos(1e-3), std::sin(1e-3)}));
  EXPECT_FALSE(gamma_membership(shallow, p, 1));
  EXPECT_TRUE(gamma_membership(shallow, 1e-4));
}

TEST(Rho, Examples) {
  const Flat v = Flat::line(vec({0, 0}), vec({1, 0.4}));
  EXPECT_NEAR(projection_metric(v, v), 0.0, 1e-15);
  const Vec nrm = vec({-0.4, 1}).normalized();
  const Flat shifted = Flat::line(vec({0, 0}) + 0.03 * nrm, vec({1, 0.4}));
  EXPECT_NEAR(projection_metric(v, shifted), 0.03, 1e-12);
  EXPECT_THROW(projection_metric(v, Flat::hyperplane(vec({1, 1, 1}), 1)), DomainError);
}

TEST(Rho, MatchesGridSearch) {
  const Flat a = Flat::line(vec({0, 0}), vec({1, 0}));
  const Flat b = Flat::line(vec({0, 0}), vec({std::cos(0.1), std::sin(0.1)}));
  double best = 0.0;
  const int g = 1000;
  for (int i = 0; i <= g; ++i) {
    for (int j = 0; j <= g; ++j) {
      const Vec x = vec({double(i) / g, double(j) / g});
      best = std::max(best, (a.project(x) - b.project(x)).norm());
    }
  }
  EXPECT_NEAR(projection_metric(a, b), best, 1e-6);
}

TEST(Boundary, Examples) {
  const Box q = Box::unit(2);
  EXPECT_NEAR(boundary_measure(Flat::line(vec({0, 0.5}), vec({1, 0})), q, 0.1), 0.2, 1e-12);
  const Flat diag = Flat::line(vec({0, 0}), vec({1, 1}));
  EXPECT_NEAR(boundary_measure(diag, q, 0.01), 2 * 0.01 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(boundary_measure(diag, q, 0.75), flat_cube_measure(diag, q), 1e-12);
  EXPECT_THROW(boundary_measure(diag, q, 0.0), DomainError);
}

TEST(Boundary, Decomposition) {
  SplitMix64 rng(19);
  for (int t = 0; t < 300; ++t) {
    const int d = 2 + t % 2;
    const int m = d == 2 ? 1 : 1 + (t / 2) % 2;
    const Box q = Box::unit(d);
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = rng.uniform();
    const Flat w = random_gamma_flat(d, m, x, 0.0, rng);
    const double eps = 0.2 * rng.uniform() + 1e-3;
    const double whole = flat_cube_measure(w, q);
    EXPECT_NEAR(boundary_measure(w, q, eps) + interior_measure(w, q, eps), whole, 1e-9);
    EXPECT_LE(boundary_measure(w, q, eps), whole + 1e-12);
  }
}

TEST(RealizationMeasure, Examples) {
  const auto p = ConstructionParams::uniform(2, 2, 2, 1);
  const auto r = build_realization(p, SelectionRule::column_lr(), 0);
  EXPECT_NEAR(realization_flat_measure(r, Flat::line(vec({0, 0}), vec({1, 1})), 0), std::sqrt(2.0), 1e-12);
  // pick the seed whose first level is the left column
  for (std::uint64_t s = 0; s < 64; ++s) {
    const auto e = build_realization(p, SelectionRule::column_lr(), s);
    if (e.level(1)[0].index[0] != 0) continue;
    EXPECT_NEAR(realization_flat_measure(e, Flat::line(vec({0.25, 0}), vec({0, 1})), 1), 1.0, 1e-12);
    return;
  }
  FAIL() << "no left-column realization among 64 seeds";
}

TEST(RealizationMeasure, FullRetentionConstantInDepth) {
  const auto r = build_realization(ConstructionParams::uniform(3, 2, 8, 4), SelectionRule::uniform_subset(), 0);
  const Flat w = Flat::hyperplane(vec({0.3, 1, 0.7}), 0.9);
  const double whole = flat_cube_measure(w, Box::unit(3));
  for (int n = 0; n <= 4; ++n) EXPECT_NEAR(realization_flat_measure(r, w, n), whole, 1e-9);
}

TEST(RealizationMeasure, BoundedByCubeSection) {
  SplitMix64 rng(7);
  const auto r = build_realization(ConstructionParams::uniform(2, 2, 2, 10), SelectionRule::uniform_subset(), 7);
  for (int t = 0; t < 50; ++t) {
    const Flat w = random_gamma_flat(2, 1, vec({rng.uniform(), rng.uniform()}), 0.0, rng);
    const double whole = flat_cube_measure(w, Box::unit(2));
    double prev = whole;
    for (int n = 0; n <= 10; ++n) {
      const double here = realization_flat_measure(r, w, n);
      EXPECT_LE(here, prev + 1e-12);  // E_n is decreasing
      prev = here;
    }
  }
}

TEST(StripCount, Examples) {
  const auto full = build_realization(ConstructionParams::uniform(2, 2, 4, 1), SelectionRule::uniform_subset(), 0);
  EXPECT_EQ(strip_cube_count(full, Strip{Flat::line(vec({0, 0.25}), vec({1, 0})), 0.25}, 1), 2u);
  const auto r = build_realization(ConstructionParams::uniform(2, 2, 2, 6), SelectionRule::uniform_subset(), 3);
  EXPECT_EQ(strip_cube_count(r, Strip{Flat::line(vec({0.5, 0.5}), vec({1, 1})), 4.0}, 6), 64u);
  EXPECT_EQ(strip_cube_count(r, Strip{Flat::line(vec({0, 5}), vec({1, 0})), 0.5}, 6), 0u);
}

TEST(StripCount, OpenStripClosedCubes) {
  const auto full = build_realization(ConstructionParams::uniform(2, 2, 4, 1), SelectionRule::uniform_subset(), 0);
  // open strip 0 < y < 0.5 touches the upper cubes only along y = 0.5
  EXPECT_EQ(strip_cube_count(full, Strip{Flat::line(vec({0, 0.25}), vec({1, 0})), 0.5}, 1), 2u);
  // a hair wider and the upper row counts
  EXPECT_EQ(strip_cube_count(full, Strip{Flat::line(vec({0, 0.25}), vec({1, 0})), 0.5 + 1e-9}, 1), 4u);
}

TEST(StripCount, FubiniSlabOnFullRetention) {
  SplitMix64 rng(5);
  for (int n = 1; n <= 4; ++n) {
    const auto p = ConstructionParams::uniform(2, 2, 4, n);
    const auto r = build_realization(p, SelectionRule::uniform_subset(), 1);
    const double rn = p.scale(n);
    const double h = std::sqrt(2.0);  // max |W ∩ E_n| over lines is the diagonal
    for (int t = 0; t < 200; ++t) {
      const Flat w = random_gamma_flat(2, 1, vec({rng.uniform(), rng.uniform()}), 0.0, rng);
      const double width = rn * rng.uniform();
      const auto z = strip_cube_count(r, Strip{w, width}, n);
      // the width of the slab is w + 2√d r_n, so the factor is (w/2 + √d r_n)·2
      EXPECT_LE(double(z) * rn * rn, 2.0 * (0.5 * width + std::sqrt(2.0) * rn) * h + 1e-12);
    }
  }
}

TEST(StripCount, FullRetentionEqualsGridCount) {
  SplitMix64 rng(11);
  const auto p = ConstructionParams::uniform(2, 2, 4, 5);
  const auto r = build_realization(p, SelectionRule::uniform_subset(), 1);
  for (int t = 0; t < 100; ++t) {
    const Flat w = random_gamma_flat(2, 1, vec({rng.uniform(), rng.uniform()}), 0.0, rng);
    const Strip s{w, 0.05 * rng.uniform()};
    std::uint64_t brute = 0;
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) brute += strip_meets(s, box({i / 32.0, j / 32.0}, {(i + 1) / 32.0, (j + 1) / 32.0}));
    EXPECT_EQ(strip_cube_count(r, s, 5), brute);
  }
}
