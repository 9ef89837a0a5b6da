// Monte-Carlo experiments on Y_n^W = (P_n r_n^d)^{-1} |W ∩ E_n|: the
// martingale identity, the conditional MGF bound, the tail bound, good-event
// frequencies, tube-sup scans and projection box dimensions.
//
// Trial t of an experiment with base seed s draws its randomness from
// trial_seed(s, t). A sampled level uses cube_stream_seed(trial seed, parent),
// exactly as extend_realization would, so a sampled Y_n equals the statistic
// of the realization built from the same seed.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cantor/box.hpp"
#include "cantor/construction.hpp"
#include "cantor/errors.hpp"
#include "cantor/geometry.hpp"
#include "cantor/measure.hpp"
#include "cantor/net.hpp"
#include "cantor/parallel.hpp"
#include "cantor/rng.hpp"

namespace cantor {

/// Mean-type checks compare within this many standard errors.
inline constexpr double kMeanSigmas = 4.0;
/// Frequency-type checks allow this many binomial standard errors.
inline constexpr double kFrequencySigmas = 3.0;
/// Minimum trial count for the conditional checks.
inline constexpr std::size_t kMinConditionalTrials = 1000;

inline double unit_ball_volume(int m) {
  return std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

/// Z(S,n) ≤ C(d) r_n^{k-d} h with C(d) = 10 (1 + 2√d)^k.
inline double strip_count_constant(int d, int k) {
  return 10.0 * std::pow(1.0 + 2.0 * std::sqrt(static_cast<double>(d)), k);
}

// ---------------------------------------------------------------------------
// Reports

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double std_dev = 0.0;
  double std_error = 0.0;
  double min = 0.0;
  double max = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
};

inline Summary summarize(std::span<const double> xs) {
  Summary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  if (xs.size() > 1) s.std_dev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  s.std_error = s.std_dev / std::sqrt(static_cast<double>(xs.size()));
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  s.q05 = quantile(0.05);
  s.q50 = quantile(0.5);
  s.q95 = quantile(0.95);
  return s;
}

/// A named table, written out as CSV.
struct Curve {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ExperimentReport {
  std::string experiment;
  /// Base seed; trial t used trial_seed(seed, t) for t in [0, trials).
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::vector<double> samples;
  Summary summary;
  /// Bounds, thresholds and derived constants, by name.
  std::map<std::string, double> values;
  /// Qualifiers such as "vacuous", "degenerate", "resolution-limited".
  std::map<std::string, bool> flags;
  /// Witness flats (e.g. the argmax tube).
  std::vector<std::pair<std::string, Flat>> flats;
  std::vector<Curve> curves;
  bool passed = false;
  std::string note;
  double runtime_seconds = 0.0;
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Concentration parameters

struct ConcentrationParams {
  double t = 0.0;
  /// Codimension: flats have dimension d - k.
  int k = 1;
  double eps_dim = 0.0;
  int n0 = 1;
  double R0 = 0.0;
  double R = 0.0;
  double lambda = 0.0;
  double lambda0 = 0.0;
  /// C(n0) with the infinite tail of the product bounded above.
  double Cn0 = 0.0;
  /// C(n0) with the product truncated at the realization depth.
  double Cn0_finite = 0.0;
};

/// First level n0 ≥ 1 such that r_m^{-t-4ε} ≤ r_m^{-s+ε} ≤ P_m ≤ r_m^{-s-ε}
/// for every m in [n0, depth], or nullopt.
inline std::optional<int> dimension_window_start(const ConstructionParams& p, double s, double t, double eps) {
  auto holds = [&](int m) {
    const double lr = -std::log(p.scale(m));  // log(1/r_m) > 0
    const double lp = std::log(static_cast<double>(p.population(m)));
    const double tol = 1e-12 * std::max(1.0, lr);
    return (t + 4 * eps) * lr <= (s - eps) * lr + tol && (s - eps) * lr <= lp + tol && lp <= (s + eps) * lr + tol;
  };
  std::optional<int> start;
  for (int m = p.depth(); m >= 1; --m) {
    if (!holds(m)) break;
    start = m;
  }
  return start;
}

/// Derives n0, R0, C(n0), R and the λ, λ0 used by the tail argument at the
/// final level. eps ≤ 0 selects (s - t)/5; `period` is passed to
/// dimension_value.
inline ConcentrationParams derive_concentration(const ConstructionParams& p, double t, int k, double eps = -1.0,
                                                int period = 0) {
  const int d = p.dim;
  if (k < 1 || k > d - 1) throw DomainError("invalid codimension k");
  const double s = dimension_value(p, period);
  if (!(t < s)) throw DomainError("exponent t must be below the dimension s");
  if (s > k + 1e-12) throw DomainError("dimension s exceeds the codimension k");
  ConcentrationParams cp;
  cp.t = t;
  cp.k = k;
  cp.eps_dim = eps > 0.0 ? eps : (s - t) / 5.0;
  if (!(5.0 * cp.eps_dim <= s - t + 1e-15)) throw DomainError("eps violates 0 < 5 eps <= s - t");
  const auto n0 = dimension_window_start(p, s, t, cp.eps_dim);
  if (!n0) throw DomainError("dimension window fails at the final level");
  cp.n0 = *n0;
  const int m = d - k;
  // |W ∩ E_{n0}| ≤ |W ∩ [0,1]^d| ≤ ω_m (√d/2)^m, and we need R0 > 1
  const double section = unit_ball_volume(m) * std::pow(0.5 * std::sqrt(static_cast<double>(d)), m);
  const double r0 = p.scale(cp.n0);
  cp.R0 = std::max(1.0 + 1e-9,
                   section / (static_cast<double>(p.population(cp.n0)) * std::pow(r0, t + d - k)));
  double product = 1.0;
  for (int i = cp.n0 + 1; i <= p.depth(); ++i) product *= 1.0 + std::pow(p.scale(i), cp.eps_dim);
  const double head = std::pow(2.0 * std::sqrt(static_cast<double>(d)) * p.branching_bound, d - k);
  cp.Cn0_finite = head * product;
  // Σ_{i>depth} r_i^ε ≤ r_depth^ε Σ_j 2^{-jε}
  const double tail = std::exp(std::pow(p.scale(p.depth()), cp.eps_dim) / (1.0 - std::pow(2.0, -cp.eps_dim)));
  cp.Cn0 = cp.Cn0_finite * tail;
  cp.R = 2.0 * cp.R0 * cp.Cn0 * (1.0 + 1e-9);
  const int n = p.depth();
  cp.lambda = static_cast<double>(p.population(n)) * std::pow(p.scale(n), k + 3 * cp.eps_dim) / cp.Cn0;
  cp.lambda0 = std::pow(p.scale(n), cp.eps_dim);
  return cp;
}

/// λ (2√d r_{n-1})^{d-k} (P_n r_n^d)^{-1}, the left side of the MGF hypothesis.
inline double mgf_hypothesis_lhs(const ConstructionParams& p, int n, int k, double lambda) {
  const int d = p.dim;
  return lambda * std::pow(2.0 * std::sqrt(static_cast<double>(d)) * p.scale(n - 1), d - k) /
         (static_cast<double>(p.population(n)) * std::pow(p.scale(n), d));
}

/// Throws "invalid λ/λ0 pair" unless 0 < λ, 0 < λ0 ≤ 1 and the hypothesis
/// λ (2√d r_{n-1})^{d-k} (P_n r_n^d)^{-1} ≤ λ0 holds.
inline void require_mgf_hypothesis(const ConstructionParams& p, int n, int k, double lambda, double lambda0) {
  if (!(lambda > 0.0) || !(lambda0 > 0.0) || lambda0 > 1.0 || mgf_hypothesis_lhs(p, n, k, lambda) > lambda0) {
    throw DomainError("invalid λ/λ0 pair");
  }
}

// ---------------------------------------------------------------------------
// Y_n^W and its samplers

inline double y_normalizer(const ConstructionParams& p, int n) {
  return static_cast<double>(p.population(n)) * std::pow(p.scale(n), p.dim);
}

inline double y_statistic(const Realization& r, const Flat& w, int n) {
  if (w.dim() != r.dim()) throw DomainError("dimension mismatch");
  return realization_flat_measure(r, w, n) / y_normalizer(r.params(), n);
}

/// An upper bound on |W ∩ E_n| valid for every realization.
inline double flat_measure_ceiling(const ConstructionParams& p, const Flat& w, int n) {
  const double whole = flat_cube_measure(w, Box::unit(p.dim));
  const int m = w.flat_dim();
  const double per_cube = unit_ball_volume(m) * std::pow(0.5 * std::sqrt(static_cast<double>(p.dim)) * p.scale(n), m);
  return std::min(whole, static_cast<double>(p.population(n)) * per_cube);
}

/// The same bound over all flats of dimension m.
inline double flat_measure_ceiling(const ConstructionParams& p, int m, int n) {
  const double root = 0.5 * std::sqrt(static_cast<double>(p.dim));
  return unit_ball_volume(m) * std::min(std::pow(root, m), static_cast<double>(p.population(n)) *
                                                                std::pow(root * p.scale(n), m));
}

/// |W ∩ E_n| for the realization grown from the cubes `start` with streams
/// rooted at `seed`; only cubes meeting W are expanded.
inline double sampled_flat_measure(const ConstructionParams& p, const SelectionRule& rule,
                                   std::span<const CubeAddress> start, const Flat& w, int n, std::uint64_t seed) {
  double total = 0.0;
  std::vector<CubeAddress> stack(start.begin(), start.end());
  while (!stack.empty()) {
    const CubeAddress q = stack.back();
    stack.pop_back();
    const Box b = cube_box(p, q);
    if (!flat_meets(w, b)) continue;
    if (q.level == n) {
      total += flat_cube_measure(w, b);
      continue;
    }
    for (const auto& c : select_children(p, rule, seed, q)) stack.push_back(c);
  }
  return total;
}


/// Draws Y_n^W given a fixed prefix E_{n-1}: the per-child section measures
/// are computed once, and each trial only redraws the selections.
class ConditionalSampler {
 public:
  /// `params` must extend the prefix's parameters through level n.
  ConditionalSampler(const ConstructionParams& params, const Realization& prefix, const Flat& w, int n)
      : params_(params), rule_(prefix.rule()), n_(n) {
    if (n < 1 || n > params.depth()) throw DomainError("undefined at this depth: level " + std::to_string(n));
    if (prefix.depth() < n - 1) throw DomainError("undefined at this depth: prefix shorter than n-1");
    if (params.dim != prefix.dim() || params.truncated(n - 1).levels != prefix.params().truncated(n - 1).levels) {
      throw DomainError("params do not extend the prefix");
    }
    if (w.dim() != params.dim) throw DomainError("dimension mismatch");
    const auto count = params.subcube_count(n);
    for (const auto& q : prefix.level(n - 1)) {
      if (!flat_meets(w, cube_box(params, q))) continue;
      Parent parent{q, std::vector<double>(count, 0.0)};
      for (std::uint64_t c = 0; c < count; ++c) {
        parent.child_measure[c] = flat_cube_measure(w, cube_box(params, q.child(params, static_cast<std::uint32_t>(c))));
      }
      parents_.push_back(std::move(parent));
    }
    y_prev_ = realization_flat_measure(prefix, w, n - 1) / y_normalizer(params, n - 1);
    norm_ = y_normalizer(params, n);
  }

  double previous() const noexcept { return y_prev_; }
  std::size_t parents_hit() const noexcept { return parents_.size(); }

  double draw(std::uint64_t seed) const {
    const Level& l = params_.level(n_);
    double total = 0.0;
    for (const auto& parent : parents_) {
      SplitMix64 rng(cube_stream_seed(seed, parent.address));
      for (auto c : rule_.select(l.branching, l.retained, params_.dim, rng)) total += parent.child_measure[c];
    }
    return total / norm_;
  }

 private:
  struct Parent {
    CubeAddress address;
    std::vector<double> child_measure;
  };
  ConstructionParams params_;
  SelectionRule rule_;
  int n_;
  std::vector<Parent> parents_;
  double y_prev_ = 0.0;
  double norm_ = 1.0;
};

namespace detail {

template <typename Draw>
std::vector<double> run_trials(std::size_t trials, std::uint64_t seed, unsigned threads, Draw&& draw) {
  std::vector<double> out(trials);
  parallel_for(trials, threads, [&](std::size_t t) { out[t] = draw(trial_seed(seed, t)); });
  return out;
}

inline void require_trials(std::size_t trials) {
  if (trials < kMinConditionalTrials) {
    throw DomainError("too few trials: conditional checks need at least " + std::to_string(kMinConditionalTrials));
  }
}

/// Seed of the fixed prefix used by the conditional checks.
inline std::uint64_t prefix_seed(std::uint64_t seed) { return derive_seed(seed, {0x707265666978ULL}); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Martingale identity

/// E(Y_n^W | E_{n-1}) = Y_{n-1}^W on the fixed prefix `prefix`.
inline ExperimentReport martingale_check(const ConstructionParams& p, const Realization& prefix, const Flat& w,
                                         int n, std::size_t trials, std::uint64_t seed, unsigned threads = 1) {
  detail::Stopwatch clock;
  detail::require_trials(trials);
  const ConditionalSampler sampler(p, prefix, w, n);
  ExperimentReport rep;
  rep.experiment = "martingale";
  rep.seed = seed;
  rep.trials = trials;
  rep.samples = detail::run_trials(trials, seed, threads, [&](std::uint64_t s) { return sampler.draw(s); });
  rep.summary = summarize(rep.samples);
  const double target = sampler.previous();
  const double gap = std::abs(rep.summary.mean - target);
  const double tol = kMeanSigmas * rep.summary.std_error + 1e-12 * std::max(1.0, std::abs(target));
  rep.values["level"] = n;
  rep.values["y_previous"] = target;
  rep.values["mean"] = rep.summary.mean;
  rep.values["std_error"] = rep.summary.std_error;
  rep.values["gap"] = gap;
  rep.values["gap_in_se"] = rep.summary.std_error > 0.0 ? gap / rep.summary.std_error : 0.0;
  rep.flags["degenerate"] = sampler.parents_hit() == 0;
  rep.flags["zero_variance"] = rep.summary.std_dev <= 1e-12 * std::max(1.0, std::abs(rep.summary.mean));  // summation order varies
  rep.passed = gap <= tol;
  if (sampler.parents_hit() == 0) rep.note = "W misses E_{n-1}; the conditional mean is trivially 0";
  rep.runtime_seconds = clock.seconds();
  return rep;
}

/// Same, with the prefix E_{n-1} built from a seed derived from `seed`.
inline ExperimentReport martingale_check(const ConstructionParams& p, const SelectionRule& rule, const Flat& w, int n,
                                         std::size_t trials, std::uint64_t seed, unsigned threads = 1) {
  if (n < 1 || n > p.depth()) throw DomainError("undefined at this depth: level " + std::to_string(n));
  const Realization prefix = build_realization(p.truncated(n - 1), rule, detail::prefix_seed(seed), threads);
  return martingale_check(p, prefix, w, n, trials, seed, threads);
}

// ---------------------------------------------------------------------------
// Conditional MGF

/// E(e^{λ Y_n} | E_{n-1}) ≤ e^{(1+λ0) λ Y_{n-1}} on a fixed prefix.
inline ExperimentReport conditional_mgf_check(const ConstructionParams& p, const Realization& prefix, const Flat& w,
                                              int n, double lambda, double lambda0, int k, std::size_t trials,
                                              std::uint64_t seed, unsigned threads = 1) {
  detail::Stopwatch clock;
  if (n < 1 || n > p.depth()) throw DomainError("undefined at this depth: level " + std::to_string(n));
  require_mgf_hypothesis(p, n, k, lambda, lambda0);
  detail::require_trials(trials);
  const ConditionalSampler sampler(p, prefix, w, n);
  ExperimentReport rep;
  rep.experiment = "mgf";
  rep.seed = seed;
  rep.trials = trials;
  rep.samples = detail::run_trials(trials, seed, threads, [&](std::uint64_t s) { return sampler.draw(s); });
  rep.summary = summarize(rep.samples);
  std::vector<double> expo(rep.samples.size());
  for (std::size_t i = 0; i < expo.size(); ++i) expo[i] = std::exp(lambda * rep.samples[i]);
  const Summary e = summarize(expo);
  const double bound = std::exp((1.0 + lambda0) * lambda * sampler.previous());
  const double rel_se = e.mean > 0.0 ? e.std_error / e.mean : 0.0;
  rep.values["level"] = n;
  rep.values["lambda"] = lambda;
  rep.values["lambda0"] = lambda0;
  rep.values["hypothesis_lhs"] = mgf_hypothesis_lhs(p, n, k, lambda);
  rep.values["y_previous"] = sampler.previous();
  rep.values["mgf_estimate"] = e.mean;
  rep.values["mgf_std_error"] = e.std_error;
  rep.values["bound"] = bound;
  rep.flags["degenerate"] = sampler.parents_hit() == 0;
  rep.passed = e.mean <= bound * (1.0 + kMeanSigmas * rel_se) + 1e-12 * bound;
  rep.runtime_seconds = clock.seconds();
  return rep;
}

inline ExperimentReport conditional_mgf_check(const ConstructionParams& p, const SelectionRule& rule, const Flat& w,
                                              int n, const ConcentrationParams& cp, std::size_t trials,
                                              std::uint64_t seed, unsigned threads = 1) {
  if (n < 1 || n > p.depth()) throw DomainError("undefined at this depth: level " + std::to_string(n));
  require_mgf_hypothesis(p, n, cp.k, cp.lambda, cp.lambda0);
  const Realization prefix = build_realization(p.truncated(n - 1), rule, detail::prefix_seed(seed), threads);
  return conditional_mgf_check(p, prefix, w, n, cp.lambda, cp.lambda0, cp.k, trials, seed, threads);
}

// ---------------------------------------------------------------------------
// Tail bound

/// P(Y_n^W > R r_n^{t-k}) ≤ exp(-r_n^{-ε}), with Y_n drawn unconditionally.
inline ExperimentReport tail_probability_check(const ConstructionParams& p, const SelectionRule& rule, const Flat& w,
                                               int n, const ConcentrationParams& cp, std::size_t trials,
                                               std::uint64_t seed, unsigned threads = 1) {
  detail::Stopwatch clock;
  if (n < 1 || n > p.depth()) throw DomainError("undefined at this depth: level " + std::to_string(n));
  if (n <= cp.n0) throw DomainError("tail check requires n > n0");
  if (trials == 0) throw DomainError("too few trials");
  if (w.flat_dim() != p.dim - cp.k) throw DomainError("flat dimension must be d - k");
  const double norm = y_normalizer(p, n);
  const CubeAddress root = CubeAddress::root(p.dim);
  ExperimentReport rep;
  rep.experiment = "tail";
  rep.seed = seed;
  rep.trials = trials;
  rep.samples = detail::run_trials(trials, seed, threads, [&](std::uint64_t s) {
    return sampled_flat_measure(p, rule, std::span<const CubeAddress>(&root, 1), w, n, s) / norm;
  });
  rep.summary = summarize(rep.samples);
  const double threshold = cp.R * std::pow(p.scale(n), cp.t - cp.k);
  const double ceiling = flat_measure_ceiling(p, w, n) / norm;
  std::size_t hits = 0;
  for (double y : rep.samples) hits += y > threshold ? 1 : 0;
  const double freq = static_cast<double>(hits) / static_cast<double>(trials);
  const double bound = std::exp(-std::pow(p.scale(n), -cp.eps_dim));
  const double se = std::sqrt(bound * (1.0 - bound) / static_cast<double>(trials));
  rep.values["level"] = n;
  rep.values["threshold"] = threshold;
  rep.values["y_ceiling"] = ceiling;
  rep.values["frequency"] = freq;
  rep.values["frequency_std_error"] = std::sqrt(freq * (1.0 - freq) / static_cast<double>(trials));
  rep.values["bound"] = bound;
  rep.values["allowance"] = bound + kFrequencySigmas * se;
  rep.values["R"] = cp.R;
  rep.flags["vacuous"] = threshold > ceiling;
  rep.passed = freq <= bound + kFrequencySigmas * se;
  if (threshold > ceiling) rep.note = "threshold exceeds every attainable value of Y_n^W";
  rep.runtime_seconds = clock.seconds();
  return rep;
}

/// Tail checks over several levels plus the trend test: each frequency may
/// exceed the previous one by at most 3 combined binomial standard errors.
inline ExperimentReport tail_trend(const ConstructionParams& p, const SelectionRule& rule, const Flat& w,
                                   const std::vector<int>& levels, const ConcentrationParams& cp, std::size_t trials,
                                   std::uint64_t seed, unsigned threads = 1) {
  detail::Stopwatch clock;
  if (levels.empty()) throw DomainError("empty level list");
  ExperimentReport rep;
  rep.experiment = "tail";
  rep.seed = seed;
  rep.trials = trials;
  Curve curve{"tail_frequency", {"n", "frequency", "std_error", "bound", "threshold", "y_max_observed", "vacuous"}, {}};
  bool all_pass = true;
  bool monotone = true;
  bool vacuous = true;
  double prev_f = 0.0;
  double prev_se = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const ExperimentReport one = tail_probability_check(p, rule, w, levels[i], cp, trials,
                                                        derive_seed(seed, {static_cast<std::uint64_t>(levels[i])}), threads);
    const double f = one.values.at("frequency");
    const double se = one.values.at("frequency_std_error");
    all_pass = all_pass && one.passed;
    vacuous = vacuous && one.flags.at("vacuous");
    if (i > 0 && f > prev_f + kFrequencySigmas * std::sqrt(prev_se * prev_se + se * se)) monotone = false;
    curve.rows.push_back({static_cast<double>(levels[i]), f, se, one.values.at("bound"), one.values.at("threshold"),
                          one.summary.max, one.flags.at("vacuous") ? 1.0 : 0.0});
    prev_f = f;
    prev_se = se;
  }
  rep.curves.push_back(std::move(curve));
  rep.values["R"] = cp.R;
  rep.values["R0"] = cp.R0;
  rep.values["Cn0"] = cp.Cn0;
  rep.values["n0"] = cp.n0;
  rep.values["eps"] = cp.eps_dim;
  rep.flags["vacuous"] = vacuous;
  rep.flags["nonincreasing"] = monotone;
  rep.passed = all_pass && monotone;
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Good events

/// Frequency of G_n: |W′ ∩ E_n| ≤ R P_n r_n^{t+d-k} + c_geom r_n^{d-k} for all
/// members W′ of `net`. Passes when the failure frequency is within the union
/// bound #net · exp(-r_n^{-ε}) plus 3 binomial standard errors.
inline ExperimentReport good_event_frequency(const ConstructionParams& p, const SelectionRule& rule, const Net& net,
                                             int n, const ConcentrationParams& cp, std::size_t trials,
                                             std::uint64_t seed, unsigned threads = 1) {
  detail::Stopwatch clock;
  if (net.params().level != n) throw DomainError("net level mismatch");
  if (n < 1 || n > p.depth()) throw DomainError("undefined at this depth: level " + std::to_string(n));
  if (net.dim() != p.dim || net.flat_dim() != p.dim - cp.k) throw DomainError("net dimension mismatch");
  if (trials == 0) throw DomainError("too few trials");
  const int d = p.dim;
  const double r = p.scale(n);
  const double threshold = cp.R * static_cast<double>(p.population(n)) * std::pow(r, cp.t + d - cp.k) +
                           net.params().c_geom * std::pow(r, d - cp.k);
  const double ceiling = flat_measure_ceiling(p, d - cp.k, n);
  const double card = static_cast<double>(net.cardinality_bound());
  const double tail = std::exp(-std::pow(r, -cp.eps_dim));
  const double allowed_failure = std::min(1.0, card * tail);
  ExperimentReport rep;
  rep.experiment = "good-events";
  rep.seed = seed;
  rep.trials = trials;
  rep.values["level"] = n;
  rep.values["threshold"] = threshold;
  rep.values["flat_measure_ceiling"] = ceiling;
  rep.values["net_cardinality"] = card;
  rep.values["net_size_exponent"] = net.size_exponent();
  rep.values["allowed_failure"] = allowed_failure;
  if (threshold >= ceiling) {
    // no realization can violate G_n(W) for any W
    rep.samples.assign(trials, 1.0);
    rep.summary = summarize(rep.samples);
    rep.values["frequency"] = 1.0;
    rep.flags["vacuous"] = true;
    rep.passed = true;
    rep.note = "threshold exceeds |W ∩ E_n| for every flat and realization; frequency certified";
    rep.runtime_seconds = clock.seconds();
    return rep;
  }
  const std::vector<Flat> members = net.members();
  rep.samples = detail::run_trials(trials, seed, threads, [&](std::uint64_t s) {
    const Realization e = build_realization(p.truncated(n), rule, s);
    for (const auto& m : members) {
      if (realization_flat_measure(e, m, n) > threshold) return 0.0;
    }
    return 1.0;
  });
  rep.summary = summarize(rep.samples);
  const double freq = rep.summary.mean;
  const double se = std::sqrt(allowed_failure * (1.0 - allowed_failure) / static_cast<double>(trials));
  rep.values["frequency"] = freq;
  rep.flags["vacuous"] = false;
  rep.passed = 1.0 - freq <= allowed_failure + kFrequencySigmas * se;
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Tube-sup scan

enum class TubeStrategy { Random, AxisParallel, ClusterPairs, Mixed };

inline std::string to_string(TubeStrategy s) {
  switch (s) {
    case TubeStrategy::Random: return "random";
    case TubeStrategy::AxisParallel: return "axis-parallel";
    case TubeStrategy::ClusterPairs: return "cluster-pairs";
    case TubeStrategy::Mixed: return "mixed";
  }
  return "mixed";
}

inline std::optional<TubeStrategy> tube_strategy_from_string(std::string_view s) {
  for (auto k : {TubeStrategy::Random, TubeStrategy::AxisParallel, TubeStrategy::ClusterPairs, TubeStrategy::Mixed}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct TubeScanOptions {
  std::size_t tubes_per_width = 2000;
  TubeStrategy strategy = TubeStrategy::Mixed;
  /// Width the finest width is compared against; 0 picks the median width.
  double reference_width = 0.0;
  /// Pass when max ratio at the finest width ≤ growth_limit × at the reference.
  double growth_limit = 2.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

namespace detail {

inline Vec random_unit(int d, SplitMix64& rng) {
  Vec u(d);
  do {
    for (int i = 0; i < d; ++i) u[i] = rng.normal();
  } while (u.norm() < 1e-12);
  return u.normalized();
}

inline Vec cube_center(const ConstructionParams& p, const CubeAddress& q, int level) {
  Vec c(p.dim);
  const double s = p.scale(level);
  for (int i = 0; i < p.dim; ++i) c[i] = (static_cast<double>(q.index[static_cast<std::size_t>(i)]) + 0.5) * s;
  return c;
}

struct CellMass {
  std::vector<std::int64_t> key;
  std::size_t count = 0;
  Vec centroid_sum;
};

struct KeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& k) const noexcept {
    std::uint64_t h = 0x51ED270B27D3A5C1ULL;
    for (auto x : k) h = mix64(h ^ static_cast<std::uint64_t>(x));
    return static_cast<std::size_t>(h);
  }
};

/// Deepest-cube counts per cell of side `cell` on the coordinates `axes`,
/// heaviest first (ties by key).
inline std::vector<CellMass> heavy_cells(std::span<const Vec> centers, const std::vector<int>& axes, double cell) {
  std::unordered_map<std::vector<std::int64_t>, CellMass, KeyHash> cells;
  const int d = centers.empty() ? 0 : static_cast<int>(centers.front().size());
  for (const auto& c : centers) {
    std::vector<std::int64_t> key;
    key.reserve(axes.size());
    for (int a : axes) key.push_back(static_cast<std::int64_t>(std::floor(c[a] / cell)));
    auto [it, inserted] = cells.try_emplace(key);
    if (inserted) {
      it->second.key = key;
      it->second.centroid_sum = Vec::Zero(d);
    }
    ++it->second.count;
    it->second.centroid_sum += c;
  }
  std::vector<CellMass> out;
  out.reserve(cells.size());
  for (auto& [k, v] : cells) out.push_back(std::move(v));
  std::sort(out.begin(), out.end(), [](const CellMass& a, const CellMass& b) {
    return a.count != b.count ? a.count > b.count : a.key < b.key;
  });
  return out;
}

struct TubeCandidate {
  Flat axis;
  std::string family;
};

inline std::vector<TubeCandidate> random_tubes(int d, std::size_t count, SplitMix64& rng) {
  std::vector<TubeCandidate> out;
  out.reserve(count);
  const Box unit = Box::unit(d);
  for (std::size_t i = 0; i < count; ++i) {
    Vec u(d);
    if (d == 2) {
      // stratified direction, offset uniform over the cube's projection
      const double phi = std::numbers::pi * (static_cast<double>(i) + rng.uniform()) / static_cast<double>(count);
      u << std::cos(phi), std::sin(phi);
      const Vec normal = (Vec(2) << -u[1], u[0]).finished();
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      unit.for_each_vertex([&](const Vec& v) {
        lo = std::min(lo, normal.dot(v));
        hi = std::max(hi, normal.dot(v));
      });
      const double c = rng.uniform(lo, hi);
      out.push_back({Flat::line(c * normal, u), "random"});
    } else {
      u = random_unit(d, rng);
      Vec x(d);
      for (int a = 0; a < d; ++a) x[a] = rng.uniform();
      out.push_back({Flat::line(x, u), "random"});
    }
  }
  return out;
}

inline std::vector<TubeCandidate> axis_parallel_tubes(int d, std::span<const Vec> centers, double width,
                                                      std::size_t count) {
  std::vector<TubeCandidate> out;
  const std::size_t per_axis = std::max<std::size_t>(1, count / static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    std::vector<int> others;
    for (int i = 0; i < d; ++i)
      if (i != a) others.push_back(i);
    const auto cells = heavy_cells(centers, others, width);
    for (std::size_t j = 0; j < std::min(per_axis, cells.size()); ++j) {
      Vec x = Vec::Constant(d, 0.5);
      for (std::size_t b = 0; b < others.size(); ++b) {
        x[others[b]] = (static_cast<double>(cells[j].key[b]) + 0.5) * width;
      }
      Vec u = Vec::Zero(d);
      u[a] = 1.0;
      out.push_back({Flat::line(x, u), "axis-parallel"});
    }
  }
  return out;
}

inline std::vector<TubeCandidate> cluster_pair_tubes(int d, std::span<const Vec> centers, double width,
                                                     std::size_t count) {
  std::vector<int> all(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) all[static_cast<std::size_t>(i)] = i;
  const auto cells = heavy_cells(centers, all, width);
  // K heaviest cells give K(K-1)/2 pairs
  std::size_t k = 2;
  while ((k + 1) * k / 2 <= count) ++k;
  k = std::min(k, cells.size());
  std::vector<TubeCandidate> out;
  for (std::size_t i = 0; i < k; ++i) {
    const Vec a = cells[i].centroid_sum / static_cast<double>(cells[i].count);
    for (std::size_t j = i + 1; j < k && out.size() < count; ++j) {
      const Vec b = cells[j].centroid_sum / static_cast<double>(cells[j].count);
      if ((b - a).norm() < 1e-12) continue;
      out.push_back({Flat::line(a, b - a), "cluster-pairs"});
    }
  }
  return out;
}

}  // namespace detail

/// Scans μ(E ∩ T)/w^t over tube families for each width. μ(E ∩ T) is the
/// outer approximation Z(T, depth)/P_depth.
inline ExperimentReport tube_sup_scan(const Realization& r, double t, std::vector<double> widths,
                                      const TubeScanOptions& opt = {}) {
  detail::Stopwatch clock;
  if (widths.empty()) throw DomainError("empty width list");
  for (double w : widths) {
    if (!(w > 0.0) || w > 1.0) throw DomainError("widths must lie in (0, 1]");
  }
  if (opt.tubes_per_width == 0) throw DomainError("tubes_per_width must be positive");
  std::sort(widths.begin(), widths.end(), std::greater<>());
  const ConstructionParams& p = r.params();
  const int d = r.dim();
  const int n = r.depth();
  const double pop = static_cast<double>(p.population(n));
  std::vector<Vec> centers;
  centers.reserve(r.level(n).size());
  for (const auto& q : r.level(n)) centers.push_back(detail::cube_center(p, q, n));

  ExperimentReport rep;
  rep.experiment = "tube-scan";
  rep.seed = opt.seed;
  Curve curve{"tube_scan", {"width", "max_ratio", "max_mass", "tubes", "resolution_limited"}, {}};
  double best = -1.0;
  std::optional<Flat> best_tube;
  std::string best_family;
  bool limited = false;
  std::vector<double> per_width_max;
  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    const double w = widths[wi];
    SplitMix64 rng(derive_seed(opt.seed, {0x74756265ULL, wi}));
    std::vector<detail::TubeCandidate> tubes;
    const std::size_t budget = opt.tubes_per_width;
    auto append = [&](std::vector<detail::TubeCandidate> more) {
      for (auto& c : more) {
        if (tubes.size() < budget) tubes.push_back(std::move(c));
      }
    };
    switch (opt.strategy) {
      case TubeStrategy::AxisParallel: append(detail::axis_parallel_tubes(d, centers, w, budget)); break;
      case TubeStrategy::ClusterPairs: append(detail::cluster_pair_tubes(d, centers, w, budget)); break;
      case TubeStrategy::Mixed:
        append(detail::axis_parallel_tubes(d, centers, w, budget / 4));
        append(detail::cluster_pair_tubes(d, centers, w, budget / 4));
        break;
      case TubeStrategy::Random: break;
    }
    append(detail::random_tubes(d, budget - tubes.size(), rng));
    std::vector<double> counts(tubes.size());
    parallel_for(tubes.size(), opt.threads, [&](std::size_t i) {
      counts[i] = static_cast<double>(strip_cube_count(r, Strip{tubes[i].axis, w}, n));
    });
    double width_max = 0.0;
    double mass_max = 0.0;
    for (std::size_t i = 0; i < tubes.size(); ++i) {
      const double mass = counts[i] / pop;
      const double ratio = mass / std::pow(w, t);
      mass_max = std::max(mass_max, mass);
      if (ratio > width_max) width_max = ratio;
      if (ratio > best) {
        best = ratio;
        best_tube = tubes[i].axis;
        best_family = tubes[i].family;
      }
    }
    const bool res_limited = w < p.scale(n);
    limited = limited || res_limited;
    per_width_max.push_back(width_max);
    curve.rows.push_back({w, width_max, mass_max, static_cast<double>(tubes.size()), res_limited ? 1.0 : 0.0});
  }
  // reference: the requested width or the median one
  std::size_t ref = widths.size() / 2;
  if (opt.reference_width > 0.0) {
    double bestgap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const double gap = std::abs(std::log(widths[i] / opt.reference_width));
      if (gap < bestgap) {
        bestgap = gap;
        ref = i;
      }
    }
  }
  const double finest = per_width_max.back();
  const double reference = per_width_max[ref];
  rep.curves.push_back(std::move(curve));
  rep.trials = opt.tubes_per_width * widths.size();
  rep.samples = per_width_max;
  rep.summary = summarize(rep.samples);
  rep.values["t"] = t;
  rep.values["depth"] = n;
  rep.values["max_ratio"] = best;
  rep.values["finest_width"] = widths.back();
  rep.values["finest_max_ratio"] = finest;
  rep.values["reference_width"] = widths[ref];
  rep.values["reference_max_ratio"] = reference;
  rep.values["growth"] = reference > 0.0 ? finest / reference : std::numeric_limits<double>::infinity();
  rep.values["growth_limit"] = opt.growth_limit;
  rep.flags["resolution-limited"] = limited;
  if (best_tube) rep.flats.emplace_back("argmax_tube:" + best_family, *best_tube);
  rep.passed = finest <= opt.growth_limit * reference;
  rep.note = "strategy " + to_string(opt.strategy);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Projection box dimension

struct BoxDimension {
  double slope = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual of the fit.
  double residual = 0.0;
  /// (δ, N(δ)) per depth.
  std::vector<std::pair<double, std::uint64_t>> counts;
};

/// Box-counting slope of the projection of E_depth onto the direction space
/// of `v`. For k = 1 the projected cubes are exact intervals; for k ≥ 2 the
/// cube centers are counted.
inline BoxDimension box_dimension_estimate(const Realization& r, const Flat& v, const std::vector<int>& depths) {
  if (depths.size() < 3) throw DomainError("insufficient scales: need at least 3 depths");
  if (v.dim() != r.dim()) throw DomainError("dimension mismatch");
  const ConstructionParams& p = r.params();
  const int n = r.depth();
  for (int j : depths) {
    if (j < 0 || j > n) throw DomainError("undefined at this depth: level " + std::to_string(j));
  }
  const int k = v.flat_dim();
  const double s = p.scale(n);
  const Mat& b = v.basis();
  BoxDimension out;
  if (k == 1) {
    const Vec u = b.col(0);
    const double halfwidth = 0.5 * s * u.cwiseAbs().sum();
    std::vector<std::pair<double, double>> iv;
    iv.reserve(r.level(n).size());
    for (const auto& q : r.level(n)) {
      const double c = u.dot(detail::cube_center(p, q, n));
      iv.emplace_back(c - halfwidth, c + halfwidth);
    }
    std::sort(iv.begin(), iv.end());
    // merge into a disjoint union
    std::vector<std::pair<double, double>> merged;
    for (const auto& seg : iv) {
      if (!merged.empty() && seg.first <= merged.back().second) {
        merged.back().second = std::max(merged.back().second, seg.second);
      } else {
        merged.push_back(seg);
      }
    }
    for (int j : depths) {
      const double delta = p.scale(j);
      std::uint64_t count = 0;
      std::int64_t last = std::numeric_limits<std::int64_t>::min();
      for (const auto& [a, z] : merged) {
        // cells [iδ, (i+1)δ) meeting the interior (a, z)
        auto lo = static_cast<std::int64_t>(std::floor(a / delta));
        const auto hi = static_cast<std::int64_t>(std::ceil(z / delta)) - 1;
        if (lo <= last) lo = last + 1;
        if (hi >= lo) count += static_cast<std::uint64_t>(hi - lo + 1);
        last = std::max(last, hi);
      }
      out.counts.emplace_back(delta, count);
    }
  } else {
    for (int j : depths) {
      const double delta = p.scale(j);
      std::vector<std::vector<std::int64_t>> cells;
      cells.reserve(r.level(n).size());
      for (const auto& q : r.level(n)) {
        const Vec y = b.transpose() * detail::cube_center(p, q, n);
        std::vector<std::int64_t> key(static_cast<std::size_t>(k));
        for (int a = 0; a < k; ++a) key[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(std::floor(y[a] / delta));
        cells.push_back(std::move(key));
      }
      std::sort(cells.begin(), cells.end());
      cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
      out.counts.emplace_back(delta, cells.size());
    }
  }
  // least squares of log N against log(1/δ)
  const double m = static_cast<double>(out.counts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [delta, count] : out.counts) {
    const double x = -std::log(delta);
    const double y = std::log(static_cast<double>(std::max<std::uint64_t>(count, 1)));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = m * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw DomainError("insufficient scales: depths must be distinct");
  out.slope = (m * sxy - sx * sy) / den;
  out.intercept = (sy - out.slope * sx) / m;
  double rss = 0.0;
  for (const auto& [delta, count] : out.counts) {
    const double e = std::log(static_cast<double>(std::max<std::uint64_t>(count, 1))) -
                     (out.intercept - out.slope * std::log(delta));
    rss += e * e;
  }
  out.residual = std::sqrt(rss / m);
  return out;
}

/// Unit vector at angle φ in the plane, as a line through the origin.
inline Flat direction_line(double phi) {
  Vec u(2);
  u << std::cos(phi), std::sin(phi);
  return Flat::line(Vec::Zero(2), u);
}

}  // namespace cantor
