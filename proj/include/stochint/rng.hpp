#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace stochint {

// Purpose tags that separate the random streams of one path.
namespace stream_tag {
inline constexpr std::uint64_t driver = 0x100;
inline constexpr std::uint64_t pathological = 0x200;
inline constexpr std::uint64_t random_tags = 0x300;
inline constexpr std::uint64_t initial_field = 0x400;
inline constexpr std::uint64_t user = 0x1000;
}  // namespace stream_tag

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(index ^ splitmix64(tag + 0xD1B54A32D192ED03ULL)));
}

/// Counter-based random stream keyed by (seed, index, tag).
///
/// Output i is a pure function of the key and i, so streams for different
/// paths can be generated in any order on any thread.
class Stream {
 public:
  constexpr Stream(std::uint64_t seed, std::uint64_t index, std::uint64_t tag)
      : key_(stream_key(seed, index, tag)) {}

  constexpr std::uint64_t next_u64() {
    return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * counter_++);
  }

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal by Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Poisson variate by sequential inversion. Large means are split into
  // pieces of at most 32 so exp(-mean) never underflows.
  std::uint64_t poisson(double mean) {
    std::uint64_t total = 0;
    while (mean > 0.0) {
      const double piece = std::min(mean, 32.0);
      mean -= piece;
      double p = std::exp(-piece);
      double cdf = p;
      const double u = uniform();
      std::uint64_t k = 0;
      while (u > cdf && p > 0.0) {
        ++k;
        p *= piece / static_cast<double>(k);
        cdf += p;
      }
      total += k;
    }
    return total;
  }

  // Standard Cauchy variate (heavy tailed test ensembles).
  double cauchy() { return std::tan(std::numbers::pi * (uniform() - 0.5)); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace stochint
