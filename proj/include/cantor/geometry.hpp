// Affine flats against grid cubes: section measures, distances, angles, the
// projection sup-metric, and incidence with realizations.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "cantor/box.hpp"
#include "cantor/construction.hpp"
#include "cantor/errors.hpp"
#include "cantor/rng.hpp"

namespace cantor {

/// Outward rounding used for all incidence decisions.
inline constexpr double kIncidenceSlack = 1e-12;

/// An affine m-plane {p + B u : u ∈ R^m} with orthonormal columns B.
class Flat {
 public:
  Flat() = default;

  /// Flat through `point` spanned by the columns of `directions`
  /// (orthonormalized here). Throws on a rank-deficient spanning set.
  static Flat through(const Vec& point, const Mat& directions) {
    const int d = static_cast<int>(point.size());
    const int m = static_cast<int>(directions.cols());
    if (directions.rows() != d || m < 1 || m > d - 1) throw DomainError("invalid flat: bad shape");
    Mat q = directions;
    for (int j = 0; j < m; ++j) {
      for (int pass = 0; pass < 2; ++pass) {
        for (int k = 0; k < j; ++k) q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
      }
      const double nrm = q.col(j).norm();
      if (!(nrm > 1e-12 * std::max(1.0, directions.col(j).norm()))) {
        throw DomainError("invalid flat: degenerate basis");
      }
      q.col(j) /= nrm;
    }
    return Flat(point, q);
  }

  /// Takes `basis` as given; it must be orthonormal to within 1e-12.
  static Flat from_orthonormal(const Vec& point, const Mat& basis) {
    const int d = static_cast<int>(point.size());
    const int m = static_cast<int>(basis.cols());
    if (basis.rows() != d || m < 1 || m > d - 1) throw DomainError("invalid flat: bad shape");
    const Mat gram = basis.transpose() * basis;
    if ((gram - Mat::Identity(m, m)).cwiseAbs().maxCoeff() > 1e-12) {
      throw DomainError("invalid flat: basis not orthonormal");
    }
    return Flat(point, basis);
  }

  static Flat line(const Vec& point, const Vec& direction) {
    Mat dir = direction;
    return through(point, dir);
  }

  /// {x : n·x = offset}; `normal` need not be unit.
  static Flat hyperplane(const Vec& normal, double offset) {
    const double nrm = normal.norm();
    if (!(nrm > 0.0)) throw DomainError("invalid flat: zero normal");
    const Vec n = normal / nrm;
    const int d = static_cast<int>(n.size());
    // Householder reflection mapping e_j to ±n; its other columns span n^⊥.
    int j = 0;
    n.cwiseAbs().maxCoeff(&j);
    Vec v = n;
    const double sgn = n[j] >= 0.0 ? 1.0 : -1.0;
    v[j] += sgn;
    const Mat h = Mat::Identity(d, d) - 2.0 * v * v.transpose() / v.squaredNorm();
    Mat basis(d, d - 1);
    for (int c = 0, out = 0; c < d; ++c) {
      if (c != j) basis.col(out++) = h.col(c);
    }
    return Flat((offset / nrm) * n, basis);
  }

  int dim() const noexcept { return static_cast<int>(point_.size()); }
  int flat_dim() const noexcept { return static_cast<int>(basis_.cols()); }
  bool is_hyperplane() const noexcept { return flat_dim() == dim() - 1; }

  const Vec& point() const noexcept { return point_; }
  const Mat& basis() const noexcept { return basis_; }

  /// Unit normal; hyperplanes only.
  const Vec& normal() const {
    if (!is_hyperplane()) throw DomainError("not a hyperplane");
    return normal_;
  }
  /// n·x for x on the hyperplane.
  double offset() const { return normal().dot(point_); }

  Vec project(const Vec& x) const { return point_ + basis_ * (basis_.transpose() * (x - point_)); }
  double distance(const Vec& x) const { return (x - project(x)).norm(); }

  /// Flat coordinates u of x ∈ W, x = p + B u.
  Vec coordinates(const Vec& x) const { return basis_.transpose() * (x - point_); }

  /// Same flat with the base point moved to the foot of the perpendicular
  /// from `anchor`.
  Flat rebased(const Vec& anchor) const { return Flat(project(anchor), basis_); }

 private:
  Flat(const Vec& point, const Mat& basis) : point_(point), basis_(basis) {
    if (is_hyperplane()) {
      const int d = dim();
      // normal = the unit vector orthogonal to all columns
      Eigen::HouseholderQR<Mat> qr(basis_);
      Mat q = qr.householderQ();
      normal_ = q.col(d - 1);
      normal_ -= basis_ * (basis_.transpose() * normal_);
      normal_.normalize();
    }
  }

  Vec point_;
  Mat basis_;
  Vec normal_;
};

/// Open neighbourhood {x : dist(x, W) < width/2}; tubes are the m = 1 case.
struct Strip {
  Flat flat;
  double width = 0.0;
};

inline Flat coordinate_hyperplane(int d, int axis) {
  Vec n = Vec::Zero(d);
  n[axis] = 1.0;
  return Flat::hyperplane(n, 0.0);
}

// ---------------------------------------------------------------------------
// Section measures H^m(W ∩ Q)

struct SectionMeasure {
  double value = 0.0;
  /// Zero for exact evaluations.
  double std_error = 0.0;
  bool exact = true;
};

namespace detail {

/// Parameter interval of the line p + t b inside the box (Liang-Barsky).
inline std::pair<double, double> clip_line(const Vec& p, const Vec& b, const Box& q) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < q.dim(); ++i) {
    if (b[i] == 0.0) {
      if (p[i] < q.lo[i] || p[i] > q.hi[i]) return {1.0, 0.0};
      continue;
    }
    double ta = (q.lo[i] - p[i]) / b[i];
    double tb = (q.hi[i] - p[i]) / b[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return {1.0, 0.0};
  }
  return {t0, t1};
}

/// Area of plane ∩ box in R^3 as the convex polygon through the edge crossings.
inline double plane_box_area_3d(const Flat& w, const Box& q) {
  const Vec& n = w.normal();
  const double c = w.offset();
  const double tol = 1e-14 * (1.0 + std::abs(c));
  std::vector<std::array<double, 2>> pts;
  pts.reserve(16);
  auto add = [&](const Vec& x) {
    const Vec u = w.coordinates(x);
    pts.push_back({u[0], u[1]});
  };
  Vec a(3), b(3);
  for (int axis = 0; axis < 3; ++axis) {
    const int i1 = (axis + 1) % 3;
    const int i2 = (axis + 2) % 3;
    for (int corner = 0; corner < 4; ++corner) {
      a[axis] = q.lo[axis];
      b[axis] = q.hi[axis];
      a[i1] = b[i1] = (corner & 1) ? q.hi[i1] : q.lo[i1];
      a[i2] = b[i2] = (corner & 2) ? q.hi[i2] : q.lo[i2];
      const double sa = n.dot(a) - c;
      const double sb = n.dot(b) - c;
      if (std::abs(sa) <= tol) add(a);
      if (std::abs(sb) <= tol) add(b);
      if ((sa < -tol && sb > tol) || (sa > tol && sb < -tol)) {
        const double t = sa / (sa - sb);
        add(a + t * (b - a));
      }
    }
  }
  if (pts.size() < 3) return 0.0;
  // Andrew's monotone chain, then the shoelace formula.
  std::sort(pts.begin(), pts.end());
  auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& p1,
                  const std::array<double, 2>& p2) {
    return (p1[0] - o[0]) * (p2[1] - o[1]) - (p1[1] - o[1]) * (p2[0] - o[0]);
  };
  std::vector<std::array<double, 2>> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  if (k < 4) return 0.0;
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    area += hull[i][0] * hull[i + 1][1] - hull[i + 1][0] * hull[i][1];
  }
  return 0.5 * std::abs(area);
}

/// (d-1)-volume of {x ∈ box : n·x = c} for unit n, from the derivative of
/// the inclusion-exclusion formula for the volume of {n·x ≤ c} ∩ box.
inline double hyperplane_box_section(const Vec& normal, double c, const Box& q) {
  const int d = q.dim();
  long double shift = static_cast<long double>(c);
  long double factor = 1.0L;
  std::array<long double, kMaxDim> coef{};
  std::array<long double, kMaxDim> side{};
  int active = 0;
  for (int i = 0; i < d; ++i) {
    const long double a = static_cast<long double>(q.hi[i]) - q.lo[i];
    const long double ni = normal[i];
    shift -= ni * q.lo[i];
    if (std::abs(normal[i]) < 1e-9) {
      factor *= a;  // the section is a product with this edge
      continue;
    }
    if (ni < 0) shift -= ni * a;  // reflect x_i -> a_i - x_i
    coef[static_cast<std::size_t>(active)] = std::abs(ni);
    side[static_cast<std::size_t>(active)] = a;
    ++active;
  }
  if (active == 0) return 0.0;
  long double norm2 = 0.0L;
  for (int i = 0; i < active; ++i) norm2 += coef[static_cast<std::size_t>(i)] * coef[static_cast<std::size_t>(i)];
  // Renormalize the retained components (dropped ones were below 1e-9).
  const long double scale = std::sqrt(norm2);
  for (int i = 0; i < active; ++i) coef[static_cast<std::size_t>(i)] /= scale;
  shift /= scale;
  if (active == 1) {
    const long double x = shift / coef[0];
    return (x >= 0.0L && x <= side[0]) ? static_cast<double>(factor) : 0.0;
  }
  long double prod = 1.0L;
  long double fact = 1.0L;
  for (int i = 0; i < active; ++i) prod *= coef[static_cast<std::size_t>(i)];
  for (int i = 2; i < active; ++i) fact *= i;
  long double sum = 0.0L;
  for (unsigned mask = 0; mask < (1u << active); ++mask) {
    long double t = shift;
    for (int i = 0; i < active; ++i) {
      if ((mask >> i) & 1u) t -= coef[static_cast<std::size_t>(i)] * side[static_cast<std::size_t>(i)];
    }
    if (t <= 0.0L) continue;
    const long double term = std::pow(t, static_cast<long double>(active - 1));
    sum += (std::popcount(mask) % 2 == 0) ? term : -term;
  }
  const long double area = sum / (fact * prod);
  return static_cast<double>(std::max(area, 0.0L) * factor);
}

inline std::uint64_t hash_doubles(std::uint64_t h, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) h = mix64(h ^ std::bit_cast<std::uint64_t>(v[i]));
  return h;
}

/// Monte-Carlo section measure for 2 <= m <= d-2: uniform points of a
/// square window in flat coordinates that covers the projected box. The
/// stream is keyed on the inputs so the result is a pure function.
inline SectionMeasure section_monte_carlo(const Flat& w, const Box& q, std::size_t samples = 1u << 16) {
  const int m = w.flat_dim();
  const Vec center = w.coordinates(q.center());
  const double radius = 0.5 * (q.hi - q.lo).norm();
  std::uint64_t h = hash_doubles(0x5EC710, w.point());
  for (int j = 0; j < m; ++j) h = hash_doubles(h, w.basis().col(j));
  h = hash_doubles(hash_doubles(h, q.lo), q.hi);
  SplitMix64 rng(h);
  std::size_t hits = 0;
  Vec u(m);
  for (std::size_t s = 0; s < samples; ++s) {
    for (int j = 0; j < m; ++j) u[j] = center[j] + radius * (2.0 * rng.uniform() - 1.0);
    const Vec x = w.point() + w.basis() * u;
    if (((x - q.lo).array() >= 0.0).all() && ((q.hi - x).array() >= 0.0).all()) ++hits;
  }
  const double window = std::pow(2.0 * radius, m);
  const double f = static_cast<double>(hits) / static_cast<double>(samples);
  return SectionMeasure{window * f, window * std::sqrt(f * (1.0 - f) / static_cast<double>(samples)),
                        false};
}

}  // namespace detail

/// H^m(W ∩ Q) for an axis-aligned box Q. Exact for lines (any d) and for
/// hyperplanes; other (d, m) use a seeded Monte-Carlo estimate with its
/// standard error.
inline SectionMeasure flat_box_section(const Flat& w, const Box& q) {
  if (w.dim() != q.dim()) throw DomainError("invalid flat: dimension differs from box");
  if (q.degenerate()) return {};
  if (w.flat_dim() == 1) {
    const auto [t0, t1] = detail::clip_line(w.point(), w.basis().col(0), q);
    return {std::max(0.0, t1 - t0), 0.0, true};
  }
  if (w.is_hyperplane()) {
    if (w.dim() == 3) return {detail::plane_box_area_3d(w, q), 0.0, true};
    return {detail::hyperplane_box_section(w.normal(), w.offset(), q), 0.0, true};
  }
  return detail::section_monte_carlo(w, q);
}

inline double flat_cube_measure(const Flat& w, const Box& q) { return flat_box_section(w, q).value; }

/// Measure of the boundary part {x ∈ Q ∩ W : dist(x, ∂Q) ≤ eps}.
inline double boundary_measure(const Flat& w, const Box& q, double eps) {
  if (!(eps > 0.0)) throw DomainError("boundary_measure: eps must be positive");
  const double whole = flat_cube_measure(w, q);
  const Box inner = q.shrunk(eps);
  if (inner.degenerate()) return whole;
  return std::max(0.0, whole - flat_cube_measure(w, inner));
}

/// Measure of the interior part, the complement of the boundary part.
inline double interior_measure(const Flat& w, const Box& q, double eps) {
  if (!(eps > 0.0)) throw DomainError("interior_measure: eps must be positive");
  const Box inner = q.shrunk(eps);
  return inner.degenerate() ? 0.0 : flat_cube_measure(w, inner);
}

// ---------------------------------------------------------------------------
// Distances

namespace detail {

inline double line_box_distance2(const Vec& p, const Vec& b, const Box& q) {
  const int d = q.dim();
  auto f = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      const double x = p[i] + t * b[i];
      const double e = std::max({q.lo[i] - x, 0.0, x - q.hi[i]});
      s += e * e;
    }
    return s;
  };
  std::array<double, 2 * kMaxDim> bp{};
  int nb = 0;
  for (int i = 0; i < d; ++i) {
    if (b[i] != 0.0) {
      bp[static_cast<std::size_t>(nb++)] = (q.lo[i] - p[i]) / b[i];
      bp[static_cast<std::size_t>(nb++)] = (q.hi[i] - p[i]) / b[i];
    }
  }
  std::sort(bp.begin(), bp.begin() + nb);
  double best = std::numeric_limits<double>::infinity();
  // f is a convex piecewise quadratic; minimize each piece in closed form.
  for (int seg = 0; seg <= nb; ++seg) {
    const double a = seg == 0 ? -std::numeric_limits<double>::infinity() : bp[static_cast<std::size_t>(seg - 1)];
    const double e = seg == nb ? std::numeric_limits<double>::infinity() : bp[static_cast<std::size_t>(seg)];
    double mid;
    if (std::isinf(a) && std::isinf(e)) mid = 0.0;
    else if (std::isinf(a)) mid = e - 1.0;
    else if (std::isinf(e)) mid = a + 1.0;
    else mid = 0.5 * (a + e);
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < d; ++i) {
      const double x = p[i] + mid * b[i];
      if (x < q.lo[i]) {
        num += b[i] * (p[i] - q.lo[i]);
        den += b[i] * b[i];
      } else if (x > q.hi[i]) {
        num += b[i] * (p[i] - q.hi[i]);
        den += b[i] * b[i];
      }
    }
    double t = den > 0.0 ? -num / den : mid;
    t = std::clamp(t, a, e);
    if (std::isinf(t)) t = mid;
    best = std::min(best, f(t));
    if (best == 0.0) break;
  }
  for (int i = 0; i < nb; ++i) best = std::min(best, f(bp[static_cast<std::size_t>(i)]));
  return best;
}

/// Coordinate descent on min_{x∈Q} |(I - BB^T)(x - p)|^2.
inline double general_box_distance2(const Flat& w, const Box& q) {
  const int d = w.dim();
  const Mat perp = Mat::Identity(d, d) - w.basis() * w.basis().transpose();
  Vec x = w.point().cwiseMax(q.lo).cwiseMin(q.hi);
  Vec g = perp * (x - w.point());
  for (int sweep = 0; sweep < 400; ++sweep) {
    double moved = 0.0;
    for (int i = 0; i < d; ++i) {
      if (perp(i, i) <= 1e-15) continue;
      const double nx = std::clamp(x[i] - g[i] / perp(i, i), q.lo[i], q.hi[i]);
      const double delta = nx - x[i];
      if (delta != 0.0) {
        g += delta * perp.col(i);
        x[i] = nx;
        moved = std::max(moved, std::abs(delta));
      }
    }
    if (moved < 1e-16) break;
  }
  const Vec r = perp * (x - w.point());
  return r.squaredNorm();
}

}  // namespace detail

/// Euclidean distance between the closed box and the flat.
inline double box_flat_distance(const Box& q, const Flat& w) {
  if (w.is_hyperplane()) {
    const Vec& n = w.normal();
    double lo = 0.0;
    double hi = 0.0;
    for (int i = 0; i < q.dim(); ++i) {
      lo += n[i] * (n[i] > 0.0 ? q.lo[i] : q.hi[i]);
      hi += n[i] * (n[i] > 0.0 ? q.hi[i] : q.lo[i]);
    }
    const double c = w.offset();
    return std::max({0.0, lo - c, c - hi});
  }
  if (w.flat_dim() == 1) return std::sqrt(detail::line_box_distance2(w.point(), w.basis().col(0), q));
  return std::sqrt(detail::general_box_distance2(w, q));
}

/// Closed box meets the open strip. Distances are rounded outward, except
/// that a distance of exactly w/2 is a boundary contact and does not count.
inline bool strip_meets(const Strip& s, const Box& q) {
  const double dist = box_flat_distance(q, s.flat);
  const double half = 0.5 * s.width;
  return dist != half && dist < half + kIncidenceSlack;
}

inline bool flat_meets(const Flat& w, const Box& q) { return box_flat_distance(q, w) <= kIncidenceSlack; }

// ---------------------------------------------------------------------------
// Angles and the projection metric

/// Angle θ(H, W) ∈ [0, π/2] between the hyperplane H and the flat W:
/// sin θ = |P_W ν| for the unit normal ν of H. Depends only on directions.
inline double plane_angle(const Flat& h, const Flat& w) {
  if (!h.is_hyperplane()) throw DomainError("not a hyperplane");
  if (h.dim() != w.dim()) throw DomainError("plane_angle: dimension mismatch");
  const double s = (w.basis().transpose() * h.normal()).norm();
  return std::asin(std::min(1.0, s));
}

/// Smallest angle between W and the coordinate hyperplanes {x_i = 0}.
inline double min_coordinate_angle(const Flat& w) {
  double best = std::numbers::pi / 2;
  for (int i = 0; i < w.dim(); ++i) {
    // |P_W e_i| is the norm of row i of the basis
    best = std::min(best, std::asin(std::min(1.0, w.basis().row(i).norm())));
  }
  return best;
}

/// W ∈ Γ_n: every coordinate-hyperplane angle is at least `angle_floor`.
inline bool gamma_membership(const Flat& w, double angle_floor) {
  return min_coordinate_angle(w) >= angle_floor;
}

/// Γ_n membership with the floor r_n^d.
inline bool gamma_membership(const Flat& w, const ConstructionParams& p, int n) {
  return gamma_membership(w, std::pow(p.scale(n), p.dim));
}

/// ρ(V, W) = sup over [0,1]^d of |π_V(x) - π_W(x)|. The difference is
/// affine in x, so the sup of its norm is attained at a cube vertex.
inline double projection_metric(const Flat& v, const Flat& w) {
  if (v.dim() != w.dim() || v.flat_dim() != w.flat_dim()) throw DomainError("dimension mismatch");
  double best = 0.0;
  Box::unit(v.dim()).for_each_vertex(
      [&](const Vec& x) { best = std::max(best, (v.project(x) - w.project(x)).norm()); });
  return best;
}

// ---------------------------------------------------------------------------
// Realization incidence

namespace detail {

/// Depth-first walk over the kept cubes of levels 0..n, skipping subtrees
/// whose box fails `keep`. `visit(level, index, box)` is called for every
/// kept cube at level n.
template <typename Keep, typename Visit>
void descend(const Realization& r, int n, Keep&& keep, Visit&& visit) {
  if (n < 0 || n > r.depth()) throw DomainError("undefined at this depth: level " + std::to_string(n));
  const ConstructionParams& p = r.params();
  std::vector<double> scales(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) scales[static_cast<std::size_t>(k)] = p.scale(k);
  const int d = r.dim();
  Box b{Vec(d), Vec(d)};
  auto box_of = [&](int k, const CubeAddress& q) {
    const double s = scales[static_cast<std::size_t>(k)];
    for (int i = 0; i < d; ++i) {
      const auto idx = static_cast<double>(q.index[static_cast<std::size_t>(i)]);
      b.lo[i] = idx * s;
      b.hi[i] = (idx + 1.0) * s;
    }
  };
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [k, i] = stack.back();
    stack.pop_back();
    box_of(k, r.level(k)[i]);
    if (!keep(b)) continue;
    if (k == n) {
      visit(k, i, b);
      continue;
    }
    const auto [lo, hi] = r.child_range(k, i);
    for (std::size_t c = hi; c-- > lo;) stack.emplace_back(k + 1, c);
  }
}

}  // namespace detail

/// |W ∩ E_n| = Σ over kept level-n cubes of H^m(W ∩ Q).
inline double realization_flat_measure(const Realization& r, const Flat& w, int n) {
  double total = 0.0;
  detail::descend(
      r, n, [&](const Box& b) { return flat_meets(w, b); },
      [&](int, std::size_t, const Box& b) { total += flat_cube_measure(w, b); });
  return total;
}

/// Z(S, n): kept level-n cubes whose closed cube meets the open strip.
inline std::uint64_t strip_cube_count(const Realization& r, const Strip& s, int n) {
  std::uint64_t count = 0;
  detail::descend(
      r, n, [&](const Box& b) { return strip_meets(s, b); },
      [&](int, std::size_t, const Box&) { ++count; });
  return count;
}

/// Every level-n grid cube (kept or not) meeting `w`, found by descending
/// the full grid D_n.
inline std::vector<Box> grid_cubes_meeting(const ConstructionParams& p, const Flat& w, int n,
                                           double slack = kIncidenceSlack) {
  std::vector<Box> out;
  std::vector<CubeAddress> stack{CubeAddress::root(p.dim)};
  while (!stack.empty()) {
    const CubeAddress q = stack.back();
    stack.pop_back();
    const Box b = cube_box(p, q);
    if (box_flat_distance(b, w) > slack) continue;
    if (q.level == n) {
      out.push_back(b);
      continue;
    }
    const auto count = p.subcube_count(q.level + 1);
    for (std::uint64_t c = 0; c < count; ++c) stack.push_back(q.child(p, static_cast<std::uint32_t>(c)));
  }
  return out;
}

}  // namespace cantor
