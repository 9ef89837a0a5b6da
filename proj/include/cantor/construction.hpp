// Finite-depth realizations of random Cantor sets E(M_n, N_n).
//
// The unit cube [0,1]^d is split into M_1^d closed subcubes of which N_1 are
// kept; inside every kept cube of level k the same is repeated with
// (M_{k+1}, N_{k+1}), independently per cube. A Realization stores the kept
// cubes of every level E_1 ⊇ E_2 ⊇ ... ⊇ E_n as integer addresses.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cantor/errors.hpp"
#include "cantor/parallel.hpp"
#include "cantor/rng.hpp"

namespace cantor {

inline constexpr int kMaxDim = 6;

/// Largest grid denominator / population we allow, so exact masses and
/// coordinates fit comfortably in 64-bit rationals.
inline constexpr std::uint64_t kMaxResolution = std::uint64_t{1} << 62;

/// One subdivision step: each kept cube is split into `branching`^d
/// subcubes and `retained` of them are kept.
struct Level {
  int branching = 2;
  std::uint64_t retained = 1;

  friend bool operator==(const Level&, const Level&) = default;
};

struct ConstructionParams {
  int dim = 2;
  std::vector<Level> levels;
  /// Uniform bound M on the branching factors.
  int branching_bound = 2;

  int depth() const noexcept { return static_cast<int>(levels.size()); }

  /// Constant sequence (M, N) repeated `depth` times.
  static ConstructionParams uniform(int dim, int branching, std::uint64_t retained, int depth) {
    ConstructionParams p;
    p.dim = dim;
    p.branching_bound = branching;
    p.levels.assign(static_cast<std::size_t>(std::max(depth, 0)), Level{branching, retained});
    return p;
  }

  /// Repeats `pattern` until `depth` levels are listed.
  static ConstructionParams periodic(int dim, const std::vector<Level>& pattern, int depth) {
    ConstructionParams p;
    p.dim = dim;
    p.branching_bound = 2;
    for (int k = 0; k < depth && !pattern.empty(); ++k) {
      p.levels.push_back(pattern[static_cast<std::size_t>(k) % pattern.size()]);
    }
    for (const Level& l : pattern) p.branching_bound = std::max(p.branching_bound, l.branching);
    return p;
  }

  const Level& level(int k) const { return levels.at(static_cast<std::size_t>(k - 1)); }

  /// Number of subcubes M_k^d at level k (1-based).
  std::uint64_t subcube_count(int k) const {
    std::uint64_t c = 1;
    for (int i = 0; i < dim; ++i) c *= static_cast<std::uint64_t>(level(k).branching);
    return c;
  }

  /// ∏_{k≤n} M_k, the number of grid cells per axis at level n.
  std::uint64_t grid_size(int n) const {
    std::uint64_t g = 1;
    for (int k = 1; k <= n; ++k) g *= static_cast<std::uint64_t>(level(k).branching);
    return g;
  }

  /// Side length r_n of a level-n cube.
  double scale(int n) const {
    double r = 1.0;
    for (int k = 1; k <= n; ++k) r /= level(k).branching;
    return r;
  }

  /// P_n, the number of kept cubes at level n.
  std::uint64_t population(int n) const {
    std::uint64_t p = 1;
    for (int k = 1; k <= n; ++k) p *= level(k).retained;
    return p;
  }

  ConstructionParams truncated(int n) const {
    ConstructionParams p = *this;
    p.levels.resize(static_cast<std::size_t>(std::clamp(n, 0, depth())));
    return p;
  }

  friend bool operator==(const ConstructionParams&, const ConstructionParams&) = default;
};

enum class RuleKind { UniformSubset, ColumnLR, DiagonalLD, Custom };

/// How N of the M^d subcubes are picked inside one parent. Subcubes are
/// numbered by their digit vector a as Σ_i a_i M^i (a_0 is the x digit).
struct SelectionRule {
  using Sampler = std::function<std::vector<std::uint32_t>(int branching, std::uint64_t retained,
                                                           int dim, SplitMix64& rng)>;

  RuleKind kind = RuleKind::UniformSubset;
  std::string custom_name;
  Sampler custom_sampler;

  static SelectionRule uniform_subset() { return {}; }
  static SelectionRule column_lr() { return SelectionRule{RuleKind::ColumnLR, {}, {}}; }
  static SelectionRule diagonal_ld() { return SelectionRule{RuleKind::DiagonalLD, {}, {}}; }
  static SelectionRule custom(std::string name, Sampler sampler) {
    return SelectionRule{RuleKind::Custom, std::move(name), std::move(sampler)};
  }

  std::string name() const {
    switch (kind) {
      case RuleKind::UniformSubset: return "UniformSubset";
      case RuleKind::ColumnLR: return "ColumnLR";
      case RuleKind::DiagonalLD: return "DiagonalLD";
      case RuleKind::Custom: return custom_name.empty() ? "Custom" : "Custom:" + custom_name;
    }
    return "Custom";
  }

  /// Deterministic rule keeping the left column {Q1, Q4} of every parent
  /// (d = 2, M = 2, N = 2), so E = {0} x [0,1]. Its marginals are not
  /// uniform; it serves as a degenerate contrast case.
  static SelectionRule always_left() {
    return custom("always-left", [](int, std::uint64_t, int, SplitMix64&) {
      return std::vector<std::uint32_t>{0, 2};
    });
  }

  static std::optional<SelectionRule> from_name(std::string_view s) {
    if (s == "UniformSubset") return uniform_subset();
    if (s == "ColumnLR") return column_lr();
    if (s == "DiagonalLD") return diagonal_ld();
    if (s == "Custom:always-left") return always_left();
    return std::nullopt;
  }

  /// Returns `retained` distinct subcube numbers in increasing order.
  std::vector<std::uint32_t> select(int branching, std::uint64_t retained, int dim,
                                    SplitMix64& rng) const {
    std::vector<std::uint32_t> out;
    switch (kind) {
      case RuleKind::ColumnLR:
        // left column {Q1, Q4} = {(0,0),(0,1)}, right column {Q2, Q3}
        out = rng.below(2) == 0 ? std::vector<std::uint32_t>{0, 2}
                                : std::vector<std::uint32_t>{1, 3};
        break;
      case RuleKind::DiagonalLD:
        // {Q1, Q3} = {(0,0),(1,1)} or {Q2, Q4} = {(1,0),(0,1)}
        out = rng.below(2) == 0 ? std::vector<std::uint32_t>{0, 3}
                                : std::vector<std::uint32_t>{1, 2};
        break;
      case RuleKind::Custom:
      {
        out = custom_sampler(branching, retained, dim, rng);
        std::sort(out.begin(), out.end());
        std::uint64_t total = 1;
        for (int i = 0; i < dim; ++i) total *= static_cast<std::uint64_t>(branching);
        const bool distinct = std::adjacent_find(out.begin(), out.end()) == out.end();
        if (out.size() != retained || !distinct || (!out.empty() && out.back() >= total)) {
          throw DomainError("rule/shape mismatch: custom rule returned an invalid subset");
        }
        break;
      }
      case RuleKind::UniformSubset: {
        std::uint64_t total = 1;
        for (int i = 0; i < dim; ++i) total *= static_cast<std::uint64_t>(branching);
        if (retained == total) {
          out.resize(total);
          for (std::uint64_t i = 0; i < total; ++i) out[i] = static_cast<std::uint32_t>(i);
          break;
        }
        // sequential draws without replacement (partial Fisher-Yates)
        std::vector<std::uint32_t> pool(total);
        for (std::uint64_t i = 0; i < total; ++i) pool[i] = static_cast<std::uint32_t>(i);
        for (std::uint64_t i = 0; i < retained; ++i) {
          std::uint64_t j = i + rng.below(total - i);
          std::swap(pool[i], pool[j]);
        }
        out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(retained));
        std::sort(out.begin(), out.end());
        break;
      }
    }
    return out;
  }
};

struct ValidationReport {
  bool ok = true;
  /// Stable short code: "overfull level", "degenerate branching", ...
  std::string code;
  std::string detail;
  /// 1-based level of the first violation, 0 when not level specific.
  int level = 0;

  explicit operator bool() const noexcept { return ok; }
};

namespace detail {
inline ValidationReport reject(std::string code, std::string detail, int level = 0) {
  return ValidationReport{false, std::move(code), std::move(detail), level};
}
}  // namespace detail

/// Checks the sequence constraints and that the rule applies at every level.
inline ValidationReport validate_params(const ConstructionParams& p, const SelectionRule& rule) {
  if (p.dim < 2 || p.dim > kMaxDim) {
    return detail::reject("invalid dimension", "d must lie in [2, " + std::to_string(kMaxDim) +
                                                   "], got " + std::to_string(p.dim));
  }
  if (p.branching_bound < 2) {
    return detail::reject("degenerate branching", "branching bound M must be >= 2");
  }
  unsigned __int128 grid = 1;
  unsigned __int128 pop = 1;
  for (int k = 1; k <= p.depth(); ++k) {
    const Level& l = p.level(k);
    const std::string at = "level " + std::to_string(k);
    if (l.branching < 2) {
      return detail::reject("degenerate branching",
                            at + ": M = " + std::to_string(l.branching) + " < 2", k);
    }
    if (l.branching > p.branching_bound) {
      return detail::reject("branching exceeds bound",
                            at + ": M = " + std::to_string(l.branching) + " > M_bound = " +
                                std::to_string(p.branching_bound),
                            k);
    }
    unsigned __int128 sub = 1;
    for (int i = 0; i < p.dim; ++i) sub *= static_cast<unsigned>(l.branching);
    if (l.retained < 1) {
      return detail::reject("empty level", at + ": N must be >= 1", k);
    }
    if (l.retained > sub) {
      return detail::reject("overfull level",
                            at + ": N = " + std::to_string(l.retained) + " > M^d = " +
                                std::to_string(static_cast<std::uint64_t>(sub)),
                            k);
    }
    if (sub > std::numeric_limits<std::uint32_t>::max()) {
      return detail::reject("resolution overflow", at + ": M^d does not fit subcube numbering", k);
    }
    grid *= static_cast<unsigned>(l.branching);
    pop *= l.retained;
    if (grid > kMaxResolution || pop > kMaxResolution) {
      return detail::reject("resolution overflow",
                            at + ": grid size or population exceeds 2^62", k);
    }
    const bool fixed_shape = rule.kind == RuleKind::ColumnLR || rule.kind == RuleKind::DiagonalLD;
    if (fixed_shape && (p.dim != 2 || l.branching != 2 || l.retained != 2)) {
      return detail::reject("rule/shape mismatch",
                            at + ": " + rule.name() + " needs (d, M, N) = (2, 2, 2)", k);
    }
  }
  if (rule.kind == RuleKind::Custom && !rule.custom_sampler) {
    return detail::reject("rule/shape mismatch", "custom rule has no sampler");
  }
  return {};
}

/// Lower-left corner of a level-`level` cube in units of r_level. The cube is
/// ∏_i [index_i r, (index_i + 1) r]. Exact, since all coordinates are
/// multiples of r_level.
struct CubeAddress {
  int level = 0;
  int dim = 0;
  std::array<std::uint64_t, kMaxDim> index{};

  static CubeAddress root(int dim) { return CubeAddress{0, dim, {}}; }

  CubeAddress parent(const ConstructionParams& p) const {
    if (level == 0) throw DomainError("root cube has no parent");
    CubeAddress q = *this;
    const auto m = static_cast<std::uint64_t>(p.level(level).branching);
    for (int i = 0; i < dim; ++i) q.index[static_cast<std::size_t>(i)] /= m;
    q.level = level - 1;
    return q;
  }

  /// Subcube number of this cube inside its parent.
  std::uint32_t digit_number(const ConstructionParams& p) const {
    const auto m = static_cast<std::uint64_t>(p.level(level).branching);
    std::uint64_t code = 0;
    for (int i = dim - 1; i >= 0; --i) code = code * m + index[static_cast<std::size_t>(i)] % m;
    return static_cast<std::uint32_t>(code);
  }

  CubeAddress child(const ConstructionParams& p, std::uint32_t number) const {
    const auto m = static_cast<std::uint64_t>(p.level(level + 1).branching);
    CubeAddress c = *this;
    c.level = level + 1;
    for (int i = 0; i < dim; ++i) {
      auto& x = c.index[static_cast<std::size_t>(i)];
      x = x * m + number % m;
      number = static_cast<std::uint32_t>(number / m);
    }
    return c;
  }

  /// Per-level digit vectors a_1..a_level, each of length d.
  std::vector<std::vector<std::uint32_t>> digits(const ConstructionParams& p) const {
    std::vector<std::vector<std::uint32_t>> out(static_cast<std::size_t>(level),
                                                std::vector<std::uint32_t>(static_cast<std::size_t>(dim)));
    auto idx = index;
    for (int k = level; k >= 1; --k) {
      const auto m = static_cast<std::uint64_t>(p.level(k).branching);
      for (int i = 0; i < dim; ++i) {
        out[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(i)] =
            static_cast<std::uint32_t>(idx[static_cast<std::size_t>(i)] % m);
        idx[static_cast<std::size_t>(i)] /= m;
      }
    }
    return out;
  }

  static CubeAddress from_digits(const ConstructionParams& p,
                                 const std::vector<std::vector<std::uint32_t>>& digits) {
    CubeAddress q = root(p.dim);
    for (std::size_t k = 0; k < digits.size(); ++k) {
      const int lvl = static_cast<int>(k) + 1;
      if (lvl > p.depth()) throw DomainError("undefined at this depth: address deeper than params");
      const auto m = static_cast<std::uint64_t>(p.level(lvl).branching);
      if (digits[k].size() != static_cast<std::size_t>(p.dim)) {
        throw DomainError("invalid address: digit vector length differs from d");
      }
      for (int i = 0; i < p.dim; ++i) {
        const auto a = digits[k][static_cast<std::size_t>(i)];
        if (a >= m) throw DomainError("invalid address: digit out of range");
        q.index[static_cast<std::size_t>(i)] = q.index[static_cast<std::size_t>(i)] * m + a;
      }
      q.level = lvl;
    }
    return q;
  }

  friend bool operator==(const CubeAddress& a, const CubeAddress& b) noexcept {
    return a.level == b.level && a.dim == b.dim && a.index == b.index;
  }
};

struct CubeAddressHash {
  std::size_t operator()(const CubeAddress& q) const noexcept {
    std::uint64_t h = mix64(static_cast<std::uint64_t>(q.level) * 131 + static_cast<std::uint64_t>(q.dim));
    for (int i = 0; i < q.dim; ++i) h = mix64(h ^ q.index[static_cast<std::size_t>(i)]);
    return static_cast<std::size_t>(h);
  }
};

/// Seed of the stream that selects the children of cube `q`.
inline std::uint64_t cube_stream_seed(std::uint64_t seed, const CubeAddress& q) {
  std::array<std::uint64_t, kMaxDim + 1> keys{};
  keys[0] = static_cast<std::uint64_t>(q.level);
  for (int i = 0; i < q.dim; ++i) keys[static_cast<std::size_t>(i) + 1] = q.index[static_cast<std::size_t>(i)];
  return derive_seed(seed, std::span<const std::uint64_t>(keys.data(), static_cast<std::size_t>(q.dim) + 1));
}

/// Children kept inside `parent` under `rule`, in increasing subcube order.
inline std::vector<CubeAddress> select_children(const ConstructionParams& p, const SelectionRule& rule,
                                                std::uint64_t seed, const CubeAddress& parent) {
  const Level& l = p.level(parent.level + 1);
  SplitMix64 rng(cube_stream_seed(seed, parent));
  const auto numbers = rule.select(l.branching, l.retained, p.dim, rng);
  std::vector<CubeAddress> out;
  out.reserve(numbers.size());
  for (auto n : numbers) out.push_back(parent.child(p, n));
  return out;
}

/// Immutable tree of kept cubes. Level k lists its cubes grouped by parent
/// (in parent order) and, within a parent, by increasing subcube number.
class Realization {
 public:
  const ConstructionParams& params() const noexcept { return params_; }
  const SelectionRule& rule() const noexcept { return rule_; }
  std::uint64_t seed() const noexcept { return seed_; }
  /// Levels 1..prefix_depth() were inherited from another realization.
  int prefix_depth() const noexcept { return prefix_depth_; }
  int depth() const noexcept { return static_cast<int>(levels_.size()) - 1; }
  int dim() const noexcept { return params_.dim; }

  std::span<const CubeAddress> level(int k) const { return levels_.at(static_cast<std::size_t>(k)).cubes; }

  /// Index range, inside level k+1, of the children of cube i of level k.
  std::pair<std::size_t, std::size_t> child_range(int k, std::size_t i) const {
    const auto& off = levels_.at(static_cast<std::size_t>(k)).child_offsets;
    return {off.at(i), off.at(i + 1)};
  }

  std::optional<std::size_t> find(const CubeAddress& q) const {
    if (q.dim != dim() || q.level < 0 || q.level > depth()) return std::nullopt;
    if (q.level == 0) return std::size_t{0};
    // walk down: the ancestor chain of q, root first
    std::vector<CubeAddress> chain(static_cast<std::size_t>(q.level) + 1);
    chain.back() = q;
    for (int k = q.level; k > 0; --k) {
      chain[static_cast<std::size_t>(k) - 1] = chain[static_cast<std::size_t>(k)].parent(params_);
    }
    std::size_t at = 0;
    for (int k = 0; k < q.level; ++k) {
      const auto [b, e] = child_range(k, at);
      const auto& next = levels_[static_cast<std::size_t>(k) + 1].cubes;
      const CubeAddress& want = chain[static_cast<std::size_t>(k) + 1];
      auto it = std::find(next.begin() + static_cast<std::ptrdiff_t>(b),
                          next.begin() + static_cast<std::ptrdiff_t>(e), want);
      if (it == next.begin() + static_cast<std::ptrdiff_t>(e)) return std::nullopt;
      at = static_cast<std::size_t>(it - next.begin());
    }
    return at;
  }

  bool contains(const CubeAddress& q) const { return find(q).has_value(); }

  Realization truncated(int n) const {
    Realization r = *this;
    n = std::clamp(n, 0, depth());
    r.params_ = params_.truncated(n);
    r.levels_.resize(static_cast<std::size_t>(n) + 1);
    r.levels_.back().child_offsets.assign(r.levels_.back().cubes.size() + 1, 0);
    r.prefix_depth_ = std::min(prefix_depth_, n);
    return r;
  }

  /// Builds from explicit per-level cube lists (any order), checking
  /// nestedness, distinctness and that each parent has exactly N_k children.
  static Realization from_levels(ConstructionParams params, SelectionRule rule, std::uint64_t seed,
                                 std::vector<std::vector<CubeAddress>> cube_levels,
                                 int prefix_depth = 0) {
    if (static_cast<int>(cube_levels.size()) != params.depth()) {
      throw ConfigError("realization: expected " + std::to_string(params.depth()) + " levels, got " +
                        std::to_string(cube_levels.size()));
    }
    Realization r;
    r.params_ = std::move(params);
    r.rule_ = std::move(rule);
    r.seed_ = seed;
    r.prefix_depth_ = prefix_depth;
    r.levels_.push_back(LevelData{{CubeAddress::root(r.params_.dim)}, {}});
    for (int k = 1; k <= r.params_.depth(); ++k) {
      auto& cubes = cube_levels[static_cast<std::size_t>(k) - 1];
      const auto& parents = r.levels_.back().cubes;
      std::unordered_map<CubeAddress, std::size_t, CubeAddressHash> parent_pos;
      parent_pos.reserve(parents.size());
      for (std::size_t i = 0; i < parents.size(); ++i) parent_pos.emplace(parents[i], i);
      std::vector<std::pair<std::pair<std::size_t, std::uint32_t>, CubeAddress>> keyed;
      keyed.reserve(cubes.size());
      for (const auto& q : cubes) {
        if (q.level != k || q.dim != r.params_.dim) {
          throw ConfigError("realization: level " + std::to_string(k) + " holds a malformed address");
        }
        auto it = parent_pos.find(q.parent(r.params_));
        if (it == parent_pos.end()) {
          throw ConfigError("realization: nestedness violated at level " + std::to_string(k));
        }
        keyed.push_back({{it->second, q.digit_number(r.params_)}, q});
      }
      std::sort(keyed.begin(), keyed.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      LevelData next;
      auto& offsets = r.levels_.back().child_offsets;
      offsets.assign(parents.size() + 1, 0);
      for (std::size_t i = 0; i < keyed.size(); ++i) {
        if (i > 0 && keyed[i].first == keyed[i - 1].first) {
          throw ConfigError("realization: duplicate cube at level " + std::to_string(k));
        }
        ++offsets[keyed[i].first.first + 1];
        next.cubes.push_back(keyed[i].second);
      }
      const auto retained = r.params_.level(k).retained;
      for (std::size_t i = 0; i < parents.size(); ++i) {
        if (offsets[i + 1] != retained) {
          throw ConfigError("realization: parent at level " + std::to_string(k - 1) + " has " +
                            std::to_string(offsets[i + 1]) + " children, expected " +
                            std::to_string(retained));
        }
        offsets[i + 1] += offsets[i];
      }
      r.levels_.push_back(std::move(next));
    }
    r.levels_.back().child_offsets.assign(r.levels_.back().cubes.size() + 1, 0);
    return r;
  }

 private:
  struct LevelData {
    std::vector<CubeAddress> cubes;
    std::vector<std::size_t> child_offsets;  // size cubes+1, into the next level
  };

  friend Realization extend_realization(const Realization&, const ConstructionParams&, std::uint64_t,
                                        unsigned);

  ConstructionParams params_;
  SelectionRule rule_;
  std::uint64_t seed_ = 0;
  int prefix_depth_ = 0;
  std::vector<LevelData> levels_;
};

/// Grows `prefix` level by level up to `params.depth()`, drawing the new
/// levels from streams rooted at `seed`. `params` must agree with the
/// prefix on its levels.
inline Realization extend_realization(const Realization& prefix, const ConstructionParams& params,
                                      std::uint64_t seed, unsigned threads = 1) {
  if (params.dim != prefix.dim() || params.depth() < prefix.depth() ||
      params.truncated(prefix.depth()).levels != prefix.params().levels) {
    throw DomainError("extend_realization: params do not extend the prefix");
  }
  Realization r = prefix;
  r.params_ = params;
  r.seed_ = seed;
  r.prefix_depth_ = prefix.depth();
  for (int k = prefix.depth(); k < params.depth(); ++k) {
    auto& parents = r.levels_[static_cast<std::size_t>(k)];
    std::vector<std::vector<CubeAddress>> groups(parents.cubes.size());
    parallel_for(parents.cubes.size(), threads, [&](std::size_t i) {
      groups[i] = select_children(r.params_, r.rule_, seed, parents.cubes[i]);
    });
    Realization::LevelData next;
    parents.child_offsets.assign(parents.cubes.size() + 1, 0);
    std::size_t total = 0;
    for (const auto& g : groups) total += g.size();
    next.cubes.reserve(total);
    for (std::size_t i = 0; i < groups.size(); ++i) {
      next.cubes.insert(next.cubes.end(), groups[i].begin(), groups[i].end());
      parents.child_offsets[i + 1] = next.cubes.size();
    }
    r.levels_.push_back(std::move(next));
  }
  r.levels_.back().child_offsets.assign(r.levels_.back().cubes.size() + 1, 0);
  return r;
}

/// Builds E_1..E_n. Equal (params, rule, seed) give identical trees for any
/// thread count. Throws DomainError carrying the validation code on bad input.
inline Realization build_realization(const ConstructionParams& params, const SelectionRule& rule,
                                     std::uint64_t seed, unsigned threads = 1) {
  if (auto v = validate_params(params, rule); !v) {
    throw DomainError(v.code + ": " + v.detail);
  }
  Realization root = Realization::from_levels(params.truncated(0), rule, seed, {});
  Realization r = extend_realization(root, params, seed, threads);
  return r;
}

/// Hausdorff dimension liminf log P_n / -log r_n of the sequence obtained
/// by repeating the last `period` levels forever (period 0 = all levels).
/// The liminf of an eventually periodic sequence equals the ratio over one
/// period.
inline double dimension_value(const ConstructionParams& p, int period = 0) {
  if (p.depth() == 0) throw DomainError("dimension_value: empty level sequence");
  if (period == 0) period = p.depth();
  if (period < 0 || period > p.depth()) throw DomainError("dimension_value: invalid period");
  double num = 0.0;
  double den = 0.0;
  for (int k = p.depth() - period + 1; k <= p.depth(); ++k) {
    num += std::log(static_cast<double>(p.level(k).retained));
    den += std::log(static_cast<double>(p.level(k).branching));
  }
  return std::clamp(num / den, 0.0, static_cast<double>(p.dim));
}

/// Empirical inclusion frequency of each subcube over `trials` draws.
inline std::vector<double> inclusion_frequencies(const SelectionRule& rule, int branching,
                                                 std::uint64_t retained, int dim, std::size_t trials,
                                                 std::uint64_t seed) {
  std::uint64_t total = 1;
  for (int i = 0; i < dim; ++i) total *= static_cast<std::uint64_t>(branching);
  std::vector<double> freq(total, 0.0);
  for (std::size_t t = 0; t < trials; ++t) {
    SplitMix64 rng(trial_seed(seed, t));
    for (auto n : rule.select(branching, retained, dim, rng)) freq[n] += 1.0;
  }
  for (auto& f : freq) f /= static_cast<double>(trials);
  return freq;
}

}  // namespace cantor
