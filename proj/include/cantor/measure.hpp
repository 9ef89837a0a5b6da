// The natural measure μ on a realization: every kept level-n cube carries
// mass 1/P_n. Cube masses and projection lengths are exact rationals.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include <boost/rational.hpp>

#include "cantor/box.hpp"
#include "cantor/construction.hpp"
#include "cantor/errors.hpp"
#include "cantor/rng.hpp"

namespace cantor {

using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational& q) {
  return static_cast<double>(q.numerator()) / static_cast<double>(q.denominator());
}

class NaturalMeasure {
 public:
  /// μ defined through level `depth` (default: the realization's depth).
  explicit NaturalMeasure(const Realization& r, int depth = -1)
      : realization_(&r), depth_(depth < 0 ? r.depth() : depth) {
    if (depth_ > r.depth()) throw DomainError("undefined at this depth: measure deeper than realization");
  }

  const Realization& realization() const noexcept { return *realization_; }
  int depth() const noexcept { return depth_; }
  int dim() const noexcept { return realization_->dim(); }

  Rational cube_mass(int level) const {
    return Rational(1, static_cast<std::int64_t>(realization_->params().population(level)));
  }

 private:
  const Realization* realization_;
  int depth_;
};

/// μ(Q) = 1/P_k when Q is a kept level-k cube, else 0.
inline Rational measure_of_cube(const NaturalMeasure& m, const CubeAddress& q) {
  if (q.level > m.depth()) throw DomainError("undefined at this depth: cube level exceeds measure depth");
  return m.realization().contains(q) ? m.cube_mass(q.level) : Rational(0);
}

/// Σ of the masses of all kept cubes at `level`; 1 for a valid realization.
inline Rational total_mass(const NaturalMeasure& m, int level = -1) {
  if (level < 0) level = m.depth();
  if (level > m.depth()) throw DomainError("undefined at this depth");
  Rational sum(0);
  const Rational unit = m.cube_mass(level);
  for (std::size_t i = 0; i < m.realization().level(level).size(); ++i) sum += unit;
  return sum;
}

/// Bracketed ball mass: `lower` counts cubes inside the ball, `upper` cubes
/// meeting it; `estimate` adds boundary cubes weighted by the fraction of a
/// fixed 4^d sub-grid of points that falls inside the ball.
struct BallMeasure {
  double lower = 0.0;
  double estimate = 0.0;
  double upper = 0.0;
};

inline BallMeasure measure_of_ball(const NaturalMeasure& m, const Vec& x, double radius) {
  const Realization& r = m.realization();
  const ConstructionParams& p = r.params();
  const int n = m.depth();
  if (!(radius > 0.0)) throw DomainError("measure_of_ball: radius must be positive");
  if (radius < p.scale(n)) throw DomainError("insufficient resolution: radius below r_depth");
  if (x.size() != r.dim()) throw DomainError("measure_of_ball: point dimension mismatch");
  const int d = r.dim();
  const double r2 = radius * radius;
  std::vector<double> scale(static_cast<std::size_t>(n) + 1);
  std::vector<double> mass(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    scale[static_cast<std::size_t>(k)] = p.scale(k);
    mass[static_cast<std::size_t>(k)] = 1.0 / static_cast<double>(p.population(k));
  }
  const int grid = 1 << (2 * d);  // 4^d sub-sample points
  BallMeasure out;
  Box b{Vec(d), Vec(d)};
  Vec probe(d);
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [k, i] = stack.back();
    stack.pop_back();
    const CubeAddress& q = r.level(k)[i];
    const double s = scale[static_cast<std::size_t>(k)];
    for (int a = 0; a < d; ++a) {
      b.lo[a] = static_cast<double>(q.index[static_cast<std::size_t>(a)]) * s;
      b.hi[a] = b.lo[a] + s;
    }
    if (b.distance2(x) > r2) continue;
    const double w = mass[static_cast<std::size_t>(k)];
    if (b.far_distance2(x) <= r2) {
      out.lower += w;
      out.estimate += w;
      out.upper += w;
      continue;
    }
    if (k == n) {
      int inside = 0;
      for (int g = 0; g < grid; ++g) {
        for (int a = 0; a < d; ++a) {
          const int digit = (g >> (2 * a)) & 3;
          probe[a] = b.lo[a] + (digit + 0.5) * 0.25 * s;
        }
        if ((probe - x).squaredNorm() <= r2) ++inside;
      }
      out.estimate += w * inside / grid;
      out.upper += w;
      continue;
    }
    const auto [lo, hi] = r.child_range(k, i);
    for (std::size_t c = lo; c < hi; ++c) stack.emplace_back(k + 1, c);
  }
  return out;
}

struct BallScanRow {
  Vec center;
  double radius = 0.0;
  BallMeasure mass;
};

struct AhlforsScan {
  double exponent = 0.0;
  /// Extremes of μ(B(x,r)) / r^exponent using the point estimate.
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  /// Extremes using the brackets: min of lower/r^Q, max of upper/r^Q.
  double min_lower_ratio = 0.0;
  double max_upper_ratio = 0.0;
  std::vector<BallScanRow> rows;

  double spread() const { return max_ratio / min_ratio; }
};

/// Scans μ(B(x,r))/r^Q for x at centers of randomly drawn deepest-level kept
/// cubes. Q defaults to d-1.
inline AhlforsScan ahlfors_ratio_scan(const NaturalMeasure& m, std::size_t samples,
                                      const std::vector<double>& radii, std::uint64_t seed,
                                      double exponent = -1.0) {
  if (radii.empty()) throw DomainError("empty radii list");
  if (samples == 0) throw DomainError("ahlfors_ratio_scan: no sample points");
  const Realization& r = m.realization();
  const double rn = r.params().scale(m.depth());
  for (double rad : radii) {
    if (rad < rn) throw DomainError("insufficient resolution: radius below r_depth");
  }
  AhlforsScan scan;
  scan.exponent = exponent < 0.0 ? r.dim() - 1.0 : exponent;
  scan.min_ratio = scan.min_lower_ratio = std::numeric_limits<double>::infinity();
  scan.max_ratio = scan.max_upper_ratio = 0.0;
  const auto cubes = r.level(m.depth());
  SplitMix64 rng(derive_seed(seed, {0xA41F0115}));
  for (std::size_t s = 0; s < samples; ++s) {
    const CubeAddress& q = cubes[rng.below(cubes.size())];
    Vec x(r.dim());
    for (int a = 0; a < r.dim(); ++a) x[a] = (static_cast<double>(q.index[static_cast<std::size_t>(a)]) + 0.5) * rn;
    for (double rad : radii) {
      const BallMeasure bm = measure_of_ball(m, x, rad);
      const double norm = std::pow(rad, scan.exponent);
      scan.min_ratio = std::min(scan.min_ratio, bm.estimate / norm);
      scan.max_ratio = std::max(scan.max_ratio, bm.estimate / norm);
      scan.min_lower_ratio = std::min(scan.min_lower_ratio, bm.lower / norm);
      scan.max_upper_ratio = std::max(scan.max_upper_ratio, bm.upper / norm);
      scan.rows.push_back({x, rad, bm});
    }
  }
  return scan;
}

/// Exact Lebesgue measure of the projection of E_level onto a coordinate
/// axis: the projected closed intervals have integer endpoints in units of
/// r_level, so their union length is (#distinct cells) / ∏M_k.
inline Rational projection_measure(const Realization& r, int axis, int level = -1) {
  if (r.dim() != 2) throw DomainError("exact projection only for d=2");
  if (axis < 0 || axis > 1) throw DomainError("projection_measure: axis must be 0 (x) or 1 (y)");
  if (level < 0) level = r.depth();
  if (level > r.depth()) throw DomainError("undefined at this depth");
  std::vector<std::uint64_t> cells;
  cells.reserve(r.level(level).size());
  for (const auto& q : r.level(level)) cells.push_back(q.index[static_cast<std::size_t>(axis)]);
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return Rational(static_cast<std::int64_t>(cells.size()),
                  static_cast<std::int64_t>(r.params().grid_size(level)));
}

}  // namespace cantor
