// Seeded, splittable random streams.
//
// Every random choice in the library is drawn from a SplitMix64 stream whose
// seed is derived by hashing a root seed with a structural key (a cube
// address, a trial id). Streams therefore do not depend on evaluation order
// or thread count, and no std:: distribution is used because their output is
// implementation defined.
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>

namespace cantor {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
  z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    state_ += UINT64_C(0x9E3779B97F4A7C15);
    return mix64(state_);
  }

  /// Uniform integer in [0, bound). Rejection sampling, so exact.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t x = (*this)();
    while (x >= limit) x = (*this)();
    return x % bound;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Standard normal variate (Box-Muller, one of the pair).
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Folds a sequence of keys into a seed. Order of keys matters, order of
/// calls elsewhere does not.
inline constexpr std::uint64_t derive_seed(std::uint64_t root,
                                           std::span<const std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(root ^ UINT64_C(0x6A09E667F3BCC909));
  for (std::uint64_t k : keys) {
    h = mix64(h + UINT64_C(0x9E3779B97F4A7C15) + mix64(k));
  }
  return h;
}

inline constexpr std::uint64_t derive_seed(std::uint64_t root,
                                           std::initializer_list<std::uint64_t> keys) noexcept {
  return derive_seed(root, std::span<const std::uint64_t>(keys.begin(), keys.size()));
}

/// Seed for trial `trial` of an experiment rooted at `base`.
inline constexpr std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial) noexcept {
  return derive_seed(base, {UINT64_C(0x7472696C), trial});
}

}  // namespace cantor
