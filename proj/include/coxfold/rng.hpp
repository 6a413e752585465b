#ifndef COXFOLD_RNG_HPP
#define COXFOLD_RNG_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "types.hpp"

namespace coxfold {

// ===================== deterministic random numbers =====================
//
// The reproducibility contract here is "bit-identical output for a given
// seed, on any platform, at any thread count".  The standard library pins
// engine bit streams but leaves every distribution implementation-defined,
// so this header carries its own tiny generator (SplitMix64) and its own
// uniform / normal / exponential / shuffle transforms.  Parallel code gets
// one independent stream per (replication, purpose) pair via derive_seed,
// which makes results independent of scheduling.

namespace detail {
/** SplitMix64 finalizer: a well-mixed 64->64 bit permutation. */
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}  // namespace detail

/**
 * Derive an independent stream seed from (master, a, b).  Used to give each
 * simulation replication and each purpose (design draw, truth draw, fold
 * split, ...) its own generator so that replications can run on any thread
 * in any order and still produce identical numbers.
 */
constexpr seed_t derive_seed(seed_t master, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = detail::mix64(master + detail::kGolden);
  h = detail::mix64(h ^ detail::mix64(a + detail::kGolden));
  h = detail::mix64(h ^ detail::mix64(b + detail::kGolden));
  return h;
}

/** SplitMix64 generator plus the distribution transforms the library needs. */
class Rng {
 public:
  explicit Rng(seed_t seed) : state_(seed) {}

  /** Next raw 64-bit word. */
  std::uint64_t next_u64() {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  /** Uniform on [0, 1) with 53 random bits. */
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /** Uniform on the open interval (0, 1); safe to pass to log(). */
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /** Uniform on [lo, hi). */
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /** Unbiased integer in [0, n); n must be positive. */
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection sampling on the final partial block keeps the draw exact.
    const std::uint64_t excess = (UINT64_MAX % n + 1ULL) % n;
    const std::uint64_t limit = UINT64_MAX - excess;
    std::uint64_t x = next_u64();
    while (x > limit) x = next_u64();
    return x % n;
  }

  /** Standard normal via Box-Muller (second value of each pair is cached). */
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  /** Exponential with the given mean. */
  double exponential(double mean) { return -mean * std::log(uniform_open()); }

  /** In-place Fisher-Yates shuffle. */
  template <class V>
  void shuffle(V& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /** k distinct indices from {0, ..., n-1} (partial Fisher-Yates). */
  std::vector<Eigen::Index> sample_indices(Eigen::Index n, Eigen::Index k) {
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto j = i + static_cast<Eigen::Index>(
                             uniform_int(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[static_cast<std::size_t>(i)],
                pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return pool;
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace coxfold

#endif  // COXFOLD_RNG_HPP
