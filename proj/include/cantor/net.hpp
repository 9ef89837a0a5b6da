// Constructive ε-nets for the angle-bounded flat families Γ_n(d, m).
//
// Hyperplanes (d=2 lines, d=3 planes) are charted by their unit normal n
// and signed offset c from the cube center z:  W = {x : n·(x - z) = c}.
// The normal is written as v/|v| with v on a face {v_j = 1} of [-1,1]^d.
// Lines in d=3 are charted by a direction u = v/|v| (same faces) and the
// point q where the line crosses the mid-plane x_j = 1/2.
//
// Lipschitz bounds for ρ in these charts (|y| ≤ R = √d/2 for y = x - z):
//   hyperplanes:  ρ ≤ |Δc| + 3R·∠(n, n')         (offset clamp included)
//   lines:        ρ ≤ |Δq| + K·∠(u, u'),  K = max |x - q| = √(1/4 + 9(d-1)/4)
// and ∠ ≤ |Δv| on a chart face. Grid spacings are chosen so that rounding
// a member of Γ_n to the grid moves it by at most ε in ρ.
//
// Nets at the standard density ε = r_n^{2d+1} are astronomically large, so a
// Net is held implicitly: nearest() rounds to the grid in O(d) and members()
// enumerates only when the cardinality is modest.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "cantor/box.hpp"
#include "cantor/calibration.hpp"
#include "cantor/construction.hpp"
#include "cantor/errors.hpp"
#include "cantor/geometry.hpp"

namespace cantor {

inline constexpr std::size_t kNetEnumerationLimit = 5'000'000;

struct NetParams {
  int level = 1;
  /// Angle floor r_n^d defining Γ_n.
  double alpha = 0.0;
  /// ρ-density r_n^{2d+1}.
  double eps_net = 0.0;
  /// Calibrated stand-in for the dimension constant C(d).
  double c_geom = 0.0;

  static NetParams standard(const ConstructionParams& p, int n, int m) {
    const double r = p.scale(n);
    return NetParams{n, std::pow(r, p.dim), std::pow(r, 2 * p.dim + 1), calibration::c_geom(p.dim, m)};
  }
};

class Net {
 public:
  enum class Kind { HyperplaneGrid, LineGrid, Explicit };

  /// A net given as an explicit list; nearest() is a brute-force search.
  static Net from_members(const NetParams& params, int d, int m, std::vector<Flat> members) {
    Net net;
    net.params_ = params;
    net.dim_ = d;
    net.flat_dim_ = m;
    net.kind_ = Kind::Explicit;
    net.explicit_ = std::move(members);
    return net;
  }

  const NetParams& params() const noexcept { return params_; }
  int dim() const noexcept { return dim_; }
  int flat_dim() const noexcept { return flat_dim_; }
  Kind kind() const noexcept { return kind_; }
  /// One member per chart suffices when ε exceeds the ρ-diameter.
  bool collapsed() const noexcept { return collapsed_; }

  /// Upper bound on the number of members (exact for explicit nets).
  long double cardinality_bound() const {
    if (kind_ == Kind::Explicit) return static_cast<long double>(explicit_.size());
    if (collapsed_) return dim_;
    const long double charts = dim_;
    const long double per_axis = static_cast<long double>(steps_) + 1.0L;
    long double dirs = charts * std::pow(per_axis, static_cast<long double>(dim_ - 1));
    if (kind_ == Kind::HyperplaneGrid) {
      return dirs * (std::ceil(std::sqrt(static_cast<long double>(dim_)) / params_.eps_net) + 1.0L);
    }
    return dirs * std::pow(static_cast<long double>(anchor_steps_) + 1.0L,
                           static_cast<long double>(dim_ - 1));
  }

  /// log #Net / log(1/ε), the polynomial growth exponent c_net.
  double size_exponent() const {
    const double inv = -std::log(params_.eps_net);
    if (!(inv > 0.0)) return 0.0;
    return static_cast<double>(std::log(std::max(cardinality_bound(), 1.0L))) / inv;
  }

  bool enumerable(std::size_t limit = kNetEnumerationLimit) const {
    return cardinality_bound() <= static_cast<long double>(limit);
  }

  /// All members; throws when the net is too large to list.
  std::vector<Flat> members(std::size_t limit = kNetEnumerationLimit) const {
    if (kind_ == Kind::Explicit) return explicit_;
    if (!enumerable(limit)) throw DomainError("net too large to enumerate");
    std::vector<Flat> out;
    for (int chart = 0; chart < dim_; ++chart) {
      if (collapsed_) {
        out.push_back(collapsed_member(chart));
        continue;
      }
      std::vector<long> g(static_cast<std::size_t>(dim_ - 1), 0);
      while (true) {
        Vec v(dim_);
        bool boundary_dup = false;
        for (int i = 0, a = 0; i < dim_; ++i) {
          if (i == chart) {
            v[i] = 1.0;
            continue;
          }
          const long gi = g[static_cast<std::size_t>(a++)];
          v[i] = grid_value(gi, steps_, -1.0, 1.0);
          // a normal with |v_i| = 1 for i < chart belongs to chart i; line
          // charts anchor on different mid-planes, so they keep both copies
          if (kind_ == Kind::HyperplaneGrid && i < chart && (gi == 0 || gi == steps_)) boundary_dup = true;
        }
        if (!boundary_dup) append_direction_members(v, chart, out);
        // odometer over the chart grid
        std::size_t a = 0;
        while (a < g.size() && ++g[a] > steps_) g[a++] = 0;
        if (a == g.size()) break;
      }
    }
    return out;
  }

  /// The member obtained by rounding W to the grid. For W ∈ Γ_n meeting the
  /// unit cube it lies in the net and satisfies ρ(W, member) ≤ ε.
  Flat nearest(const Flat& w) const {
    if (w.dim() != dim_ || w.flat_dim() != flat_dim_) throw DomainError("dimension mismatch");
    if (kind_ == Kind::Explicit) {
      if (explicit_.empty()) throw DomainError("empty net");
      std::size_t best = 0;
      double best_rho = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < explicit_.size(); ++i) {
        const double rho = projection_metric(w, explicit_[i]);
        if (rho < best_rho) {
          best_rho = rho;
          best = i;
        }
      }
      return explicit_[best];
    }
    if (!gamma_membership(w, params_.alpha)) throw DomainError("flat outside Γ_n");
    const Vec z = Vec::Constant(dim_, 0.5);
    if (kind_ == Kind::HyperplaneGrid) {
      Vec n = w.normal();
      double c = n.dot(w.point() - z);
      int j = 0;
      n.cwiseAbs().maxCoeff(&j);
      if (n[j] < 0.0) {
        n = -n;
        c = -c;
      }
      if (collapsed_) return collapsed_member(j);
      Vec v = n / n[j];
      for (int i = 0; i < dim_; ++i) {
        if (i != j) v[i] = grid_value(round_to_grid(v[i], steps_, -1.0, 1.0), steps_, -1.0, 1.0);
      }
      v[j] = 1.0;
      const Vec nn = v.normalized();
      const double h = 0.5 * nn.cwiseAbs().sum();
      const long count = offset_steps(h);
      const long k = round_to_grid(c, count, -h, h);
      return hyperplane_member(nn, grid_value(k, count, -h, h));
    }
    // lines
    Vec u = w.basis().col(0);
    int j = 0;
    u.cwiseAbs().maxCoeff(&j);
    if (u[j] < 0.0) u = -u;
    if (collapsed_) return collapsed_member(j);
    const Vec q = w.point() + ((0.5 - w.point()[j]) / u[j]) * u;
    Vec v = u / u[j];
    Vec qq = q;
    for (int i = 0; i < dim_; ++i) {
      if (i == j) continue;
      v[i] = grid_value(round_to_grid(v[i], steps_, -1.0, 1.0), steps_, -1.0, 1.0);
      qq[i] = grid_value(round_to_grid(q[i], anchor_steps_, -0.5, 1.5), anchor_steps_, -0.5, 1.5);
    }
    v[j] = 1.0;
    qq[j] = 0.5;
    return Flat::line(qq, v.normalized());
  }

 private:
  friend Net build_net(const NetParams& np, int d, int m);

  static double grid_value(long k, long steps, double lo, double hi) {
    if (k == steps) return hi;
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps);
  }
  static long round_to_grid(double x, long steps, double lo, double hi) {
    const double t = (x - lo) / (hi - lo) * static_cast<double>(steps);
    return std::clamp(static_cast<long>(std::llround(t)), 0L, steps);
  }

  long offset_steps(double h) const {
    return std::max(1L, static_cast<long>(std::ceil(2.0 * h / params_.eps_net)));
  }

  Flat hyperplane_member(const Vec& n, double c) const {
    const Vec z = Vec::Constant(dim_, 0.5);
    return Flat::hyperplane(n, n.dot(z) + c);
  }

  Flat collapsed_member(int chart) const {
    Vec v = Vec::Constant(dim_, 0.5);
    v[chart] = 1.0;
    const Vec z = Vec::Constant(dim_, 0.5);
    if (kind_ == Kind::HyperplaneGrid) return hyperplane_member(v.normalized(), 0.0);
    return Flat::line(z, v.normalized());
  }

  bool direction_in_family(const Vec& dir) const {
    // coordinate-hyperplane angles of the member: acos|n_i| for hyperplanes,
    // asin|u_i| for lines; every one must be positive and within angle_slack_
    // of the floor.
    const double floor = std::max(params_.alpha - angle_slack_, 0.0);
    for (int i = 0; i < dim_; ++i) {
      const double a = std::abs(dir[i]);
      const double angle = kind_ == Kind::HyperplaneGrid ? std::acos(std::min(1.0, a)) : std::asin(std::min(1.0, a));
      if (!(angle > 0.0) || angle < floor) return false;
    }
    return true;
  }

  void append_direction_members(const Vec& v, int chart, std::vector<Flat>& out) const {
    const Vec dir = v.normalized();
    if (!direction_in_family(dir)) return;
    if (kind_ == Kind::HyperplaneGrid) {
      const double h = 0.5 * dir.cwiseAbs().sum();
      const long count = offset_steps(h);
      for (long k = 0; k <= count; ++k) out.push_back(hyperplane_member(dir, grid_value(k, count, -h, h)));
      return;
    }
    const Box unit = Box::unit(dim_);
    std::vector<long> g(static_cast<std::size_t>(dim_ - 1), 0);
    while (true) {
      Vec q(dim_);
      for (int i = 0, a = 0; i < dim_; ++i) {
        q[i] = i == chart ? 0.5 : grid_value(g[static_cast<std::size_t>(a++)], anchor_steps_, -0.5, 1.5);
      }
      Flat line = Flat::line(q, dir);
      if (box_flat_distance(unit, line) <= params_.eps_net) out.push_back(std::move(line));
      std::size_t a = 0;
      while (a < g.size() && ++g[a] > anchor_steps_) g[a++] = 0;
      if (a == g.size()) break;
    }
  }

  NetParams params_;
  int dim_ = 0;
  int flat_dim_ = 0;
  Kind kind_ = Kind::Explicit;
  bool collapsed_ = false;
  long steps_ = 1;         // chart grid intervals per axis on [-1, 1]
  long anchor_steps_ = 1;  // anchor grid intervals per axis on [-1/2, 3/2]
  double angle_slack_ = 0.0;
  std::vector<Flat> explicit_;
};

/// Grid net for (d, m) ∈ {(2,1), (3,1), (3,2)}.
inline Net build_net(const NetParams& np, int d, int m) {
  const bool supported = (d == 2 && m == 1) || (d == 3 && (m == 1 || m == 2));
  if (!supported) throw DomainError("unsupported (d,m) for net construction");
  if (!(np.eps_net > 0.0) || !(np.alpha >= 0.0)) throw DomainError("build_net: invalid net parameters");
  Net net;
  net.params_ = np;
  net.dim_ = d;
  net.flat_dim_ = m;
  net.kind_ = m == d - 1 ? Net::Kind::HyperplaneGrid : Net::Kind::LineGrid;
  const double root = std::sqrt(static_cast<double>(d - 1));
  // two flats meeting the cube are within ρ ≤ 2√d of each other
  if (np.eps_net >= 2.0 * std::sqrt(static_cast<double>(d))) {
    net.collapsed_ = true;
    return net;
  }
  if (net.kind_ == Net::Kind::HyperplaneGrid) {
    const double radius = 0.5 * std::sqrt(static_cast<double>(d));
    const double spacing = np.eps_net / (3.0 * radius * root);
    net.steps_ = std::max(1L, static_cast<long>(std::ceil(2.0 / spacing)));
  } else {
    const double k = std::sqrt(0.25 + 2.25 * (d - 1));
    const double dir_spacing = np.eps_net / (k * root);
    const double anchor_spacing = np.eps_net / root;
    net.steps_ = std::max(1L, static_cast<long>(std::ceil(2.0 / dir_spacing)));
    net.anchor_steps_ = std::max(1L, static_cast<long>(std::ceil(2.0 / anchor_spacing)));
  }
  net.angle_slack_ = 0.5 * root * (2.0 / static_cast<double>(net.steps_));
  return net;
}

// ---------------------------------------------------------------------------
// Random members of Γ_n and the geometric audit

/// Random flat of dimension m through `x` whose coordinate-hyperplane angles
/// are all ≥ `alpha`. With `near_edge`, one angle is drawn from
/// [alpha, 1.5 alpha] (lines and hyperplanes only).
inline Flat random_gamma_flat(int d, int m, const Vec& x, double alpha, SplitMix64& rng,
                              bool near_edge = false) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    if (m == 1 || m == d - 1) {
      Vec g(d);
      for (int i = 0; i < d; ++i) g[i] = rng.normal();
      g.normalize();
      const bool line = m == 1;
      if (near_edge) {
        const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
        const double angle = std::min(alpha * (1.0 + 0.5 * rng.uniform()), std::numbers::pi / 2);
        const double target = line ? std::sin(angle) : std::cos(angle);
        const double rest = std::sqrt(std::max(0.0, 1.0 - target * target));
        const double others = std::sqrt(std::max(0.0, 1.0 - g[i] * g[i]));
        if (others <= 0.0) continue;
        for (int a = 0; a < d; ++a) g[a] = a == i ? (g[i] < 0 ? -target : target) : g[a] * rest / others;
      }
      Flat w = line ? Flat::line(x, g) : Flat::hyperplane(g, g.dot(x));
      if (gamma_membership(w, alpha)) return w;
      continue;
    }
    Mat b(d, m);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < m; ++j) b(i, j) = rng.normal();
    Flat w = Flat::through(x, b);
    if (gamma_membership(w, alpha)) return w;
  }
  throw DomainError("random_gamma_flat: Γ_n is too thin to sample");
}

/// One audited (W, Q) case of the net-transfer and boundary bounds.
struct GeometryAuditCase {
  int level = 0;
  /// (|W∩Q| - |W'∩Q|) / r^{d+m}; may be negative.
  double transfer_ratio = 0.0;
  /// H^m(B(Q, W, 2ε)) / r^{d+m}.
  double boundary_ratio = 0.0;
  /// H^m(I(Q, W, 2ε)) - H^m(W'∩Q); must be ≤ 0 up to rounding.
  double interior_excess = 0.0;
  double rho = 0.0;
  double eps = 0.0;
};

struct GeometryAudit {
  int dim = 0;
  int flat_dim = 0;
  std::vector<GeometryAuditCase> cases;
  double max_transfer_ratio = -std::numeric_limits<double>::infinity();
  double max_boundary_ratio = 0.0;
  double max_interior_excess = -std::numeric_limits<double>::infinity();
  double max_rho_over_eps = 0.0;

  /// 2x the largest observed ratio: the calibration rule for c_geom.
  double calibrated_constant() const { return 2.0 * std::max(max_transfer_ratio, max_boundary_ratio); }
};

/// Randomized audit: level n uniform in [1, max_level], Q a uniform grid cube
/// of D_n (dyadic grid, M = 2), W ∈ Γ_n through a uniform point of Q (half of
/// the cases near the edge of Γ_n), W' the net rounding of W at ε = r_n^{2d+1}.
inline GeometryAudit geometry_audit(int d, int m, int cases, int max_level, std::uint64_t seed) {
  GeometryAudit audit{d, m, {}};
  SplitMix64 rng(derive_seed(seed, {static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(m)}));
  for (int c = 0; c < cases; ++c) {
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_level)));
    const ConstructionParams p = ConstructionParams::uniform(d, 2, 1, n);
    NetParams np{n, std::pow(p.scale(n), d), std::pow(p.scale(n), 2 * d + 1), 0.0};
    const Net net = build_net(np, d, m);
    const double r = p.scale(n);
    Box q{Vec(d), Vec(d)};
    Vec x(d);
    for (int i = 0; i < d; ++i) {
      const auto idx = static_cast<double>(rng.below(p.grid_size(n)));
      q.lo[i] = idx * r;
      q.hi[i] = (idx + 1.0) * r;
      x[i] = q.lo[i] + r * rng.uniform();
    }
    const Flat w = random_gamma_flat(d, m, x, np.alpha, rng, c % 2 == 1);
    const Flat w2 = net.nearest(w);
    const double norm = std::pow(r, d + m);
    GeometryAuditCase rec;
    rec.level = n;
    rec.eps = np.eps_net;
    rec.rho = projection_metric(w, w2);
    const double a = flat_cube_measure(w, q);
    const double b = flat_cube_measure(w2, q);
    rec.transfer_ratio = (a - b) / norm;
    rec.boundary_ratio = boundary_measure(w, q, 2.0 * np.eps_net) / norm;
    rec.interior_excess = interior_measure(w, q, 2.0 * np.eps_net) - b;
    audit.max_transfer_ratio = std::max(audit.max_transfer_ratio, rec.transfer_ratio);
    audit.max_boundary_ratio = std::max(audit.max_boundary_ratio, rec.boundary_ratio);
    audit.max_interior_excess = std::max(audit.max_interior_excess, rec.interior_excess);
    audit.max_rho_over_eps = std::max(audit.max_rho_over_eps, rec.rho / rec.eps);
    audit.cases.push_back(rec);
  }
  return audit;
}

}  // namespace cantor
