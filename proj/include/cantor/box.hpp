#pragma once

#include <Eigen/Dense>

#include "cantor/construction.hpp"

namespace cantor {

/// Small fixed-capacity vectors; no heap traffic in hot loops.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Closed axis-aligned box ∏ [lo_i, hi_i].
struct Box {
  Vec lo;
  Vec hi;

  int dim() const noexcept { return static_cast<int>(lo.size()); }
  Vec center() const { return 0.5 * (lo + hi); }
  bool degenerate() const { return ((hi - lo).array() <= 0.0).any(); }

  static Box unit(int d) { return Box{Vec::Zero(d), Vec::Ones(d)}; }

  Box shrunk(double eps) const { return Box{lo.array() + eps, hi.array() - eps}; }

  /// Squared distance from x to the box.
  double distance2(const Vec& x) const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) {
      const double e = std::max({lo[i] - x[i], 0.0, x[i] - hi[i]});
      s += e * e;
    }
    return s;
  }

  /// Squared distance from x to the farthest point of the box.
  double far_distance2(const Vec& x) const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) {
      const double e = std::max(std::abs(x[i] - lo[i]), std::abs(x[i] - hi[i]));
      s += e * e;
    }
    return s;
  }

  template <typename Fn>
  void for_each_vertex(Fn&& fn) const {
    const int d = dim();
    Vec v(d);
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      for (int i = 0; i < d; ++i) v[i] = (mask >> i) & 1u ? hi[i] : lo[i];
      fn(v);
    }
  }
};

/// Floating-point box of a grid cube. Exact whenever r_level is a dyadic
/// rational (M_k powers of two); otherwise correctly rounded per corner.
inline Box cube_box(const ConstructionParams& p, const CubeAddress& q) {
  const double r = p.scale(q.level);
  Box b{Vec(q.dim), Vec(q.dim)};
  for (int i = 0; i < q.dim; ++i) {
    const auto idx = static_cast<double>(q.index[static_cast<std::size_t>(i)]);
    b.lo[i] = idx * r;
    b.hi[i] = (idx + 1.0) * r;
  }
  return b;
}

}  // namespace cantor
