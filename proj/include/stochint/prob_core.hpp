#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stochint/error.hpp"
#include "stochint/parallel.hpp"
#include "stochint/rng.hpp"

namespace stochint {

class Ensemble;

/// The shared probability space: M outcomes, each with its own random streams.
///
/// Two spaces built from the same (paths, seed) are the same space: they get
/// the same id and regenerate bit-identical samples.
class ProbSpace {
 public:
  ProbSpace(std::size_t paths, std::uint64_t seed) : paths_(paths), seed_(seed) {
    if (paths < 2) throw ParameterError("ProbSpace needs at least 2 paths");
    id_ = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(paths)));
  }

  std::size_t paths() const { return paths_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t id() const { return id_; }

  Stream stream(std::size_t path, std::uint64_t tag) const { return Stream(seed_, path, tag); }

  /// Builds an Ensemble with sample k = gen(stream(k, tag)), in parallel over k.
  template <class Gen>
  Ensemble generate(std::uint64_t tag, Gen&& gen) const;

  Ensemble constant(double value) const;
  Ensemble zeros() const;

  friend bool operator==(const ProbSpace& a, const ProbSpace& b) { return a.id_ == b.id_; }

 private:
  std::size_t paths_;
  std::uint64_t seed_;
  std::uint64_t id_ = 0;
};

/// A random variable realised as one sample per outcome of a ProbSpace.
///
/// Immutable; arithmetic acts per outcome and only between ensembles of the
/// same space.
class Ensemble {
 public:
  Ensemble(std::uint64_t space_id, std::vector<double> samples)
      : space_id_(space_id), samples_(std::move(samples)) {}

  std::uint64_t space_id() const { return space_id_; }
  std::size_t size() const { return samples_.size(); }
  double operator[](std::size_t k) const { return samples_[k]; }
  std::span<const double> samples() const { return samples_; }

  bool is_finite() const {
    return std::all_of(samples_.begin(), samples_.end(), [](double v) { return std::isfinite(v); });
  }

  double mean() const {
    return std::accumulate(samples_.begin(), samples_.end(), 0.0) / static_cast<double>(size());
  }

  // Unbiased sample variance.
  double variance() const {
    const double m = mean();
    double s = 0.0;
    for (double v : samples_) s += (v - m) * (v - m);
    return s / static_cast<double>(size() - 1);
  }

  template <class Op>
  Ensemble map(Op&& op) const {
    std::vector<double> out(samples_.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = op(samples_[k]);
    return Ensemble(space_id_, std::move(out));
  }

  friend Ensemble operator+(const Ensemble& a, const Ensemble& b) { return zip(a, b, std::plus<>{}); }
  friend Ensemble operator-(const Ensemble& a, const Ensemble& b) { return zip(a, b, std::minus<>{}); }
  friend Ensemble operator*(const Ensemble& a, const Ensemble& b) { return zip(a, b, std::multiplies<>{}); }
  friend Ensemble operator*(double s, const Ensemble& a) { return a.map([s](double v) { return s * v; }); }
  friend Ensemble operator*(const Ensemble& a, double s) { return s * a; }
  friend Ensemble operator+(const Ensemble& a, double s) { return a.map([s](double v) { return v + s; }); }
  friend Ensemble operator-(const Ensemble& a) { return a.map([](double v) { return -v; }); }

 private:
  template <class Op>
  static Ensemble zip(const Ensemble& a, const Ensemble& b, Op op) {
    require_aligned(a, b);
    std::vector<double> out(a.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = op(a.samples_[k], b.samples_[k]);
    return Ensemble(a.space_id_, std::move(out));
  }

  friend void require_aligned(const Ensemble& a, const Ensemble& b) {
    if (a.space_id_ != b.space_id_ || a.size() != b.size())
      throw AlignmentError("ensembles live on different probability spaces");
  }

  std::uint64_t space_id_;
  std::vector<double> samples_;
};

template <class Gen>
Ensemble ProbSpace::generate(std::uint64_t tag, Gen&& gen) const {
  std::vector<double> out(paths_);
  parallel_for(paths_, [&](std::size_t k) {
    Stream s = stream(k, tag);
    out[k] = gen(s);
  });
  return Ensemble(id_, std::move(out));
}

inline Ensemble ProbSpace::constant(double value) const {
  return Ensemble(id_, std::vector<double>(paths_, value));
}

inline Ensemble ProbSpace::zeros() const { return constant(0.0); }

/// Empirical Ky Fan quasi-norm inf{d : P(|X| > d) <= d}; always in [0, 1].
struct KyFanValue {
  double value = 0.0;

  friend auto operator<=>(const KyFanValue&, const KyFanValue&) = default;
};

/// Exact Ky Fan infimum of the empirical distribution.
///
/// With |x| sorted ascending as a_1 <= ... <= a_M and a_0 = 0, the set of
/// admissible d is {d : d >= a_{M-k} and d >= k/M for some k}, so the
/// infimum is min_k max(a_{M-k}, k/M) over k = 0..M.
inline KyFanValue ky_fan(std::span<const double> samples) {
  const std::size_t m = samples.size();
  if (m < 2) throw PreconditionError("ky_fan needs at least 2 samples");
  std::vector<double> a(m);
  for (std::size_t k = 0; k < m; ++k) {
    if (!std::isfinite(samples[k])) throw DegenerateInputError("ky_fan: non-finite sample");
    a[k] = std::abs(samples[k]);
  }
  std::sort(a.begin(), a.end());
  const double inv_m = 1.0 / static_cast<double>(m);
  double best = 1.0;  // k = M
  for (std::size_t k = 0; k < m; ++k) {
    const double frac = static_cast<double>(k) * inv_m;
    if (frac >= best) break;
    best = std::min(best, std::max(a[m - 1 - k], frac));
  }
  return {best};
}

inline KyFanValue ky_fan(const Ensemble& e) { return ky_fan(e.samples()); }

inline KyFanValue ky_fan_distance(const Ensemble& a, const Ensemble& b) { return ky_fan(a - b); }

struct TailPoint {
  double threshold;
  double sup_tail;  // sup over the family of P(|xi| > threshold)
};

/// Tail profile of a family of random variables, for judging boundedness in probability.
inline std::vector<TailPoint> check_boundedness(std::span<const Ensemble> family,
                                                std::span<const double> thresholds) {
  if (family.empty()) throw DomainError("check_boundedness: empty family");
  if (thresholds.empty()) throw DomainError("check_boundedness: no thresholds");
  for (const auto& e : family) require_aligned(family.front(), e);
  std::vector<TailPoint> out;
  out.reserve(thresholds.size());
  for (double c : thresholds) {
    double sup = 0.0;
    for (const auto& e : family) {
      std::size_t over = 0;
      for (double v : e.samples()) over += std::abs(v) > c ? 1 : 0;
      sup = std::max(sup, static_cast<double>(over) / static_cast<double>(e.size()));
    }
    out.push_back({c, sup});
  }
  return out;
}

struct SubsetInequality {
  KyFanValue lhs;  // || sum c_k xi_k ||
  KyFanValue rhs;  // 16 max_V || sum_{k in V} xi_k ||
  double ratio;    // lhs / rhs (0 when both vanish)
  bool holds;
};

inline constexpr std::size_t kMaxSubsetTerms = 20;
inline constexpr double kSubsetConstant = 16.0;

/// Checks ||sum c_k xi_k|| <= 16 max over subsets V of ||sum_{k in V} xi_k||, |c_k| <= 1,
/// enumerating all 2^l subsets.
inline SubsetInequality check_subset_inequality(std::span<const Ensemble> xs,
                                                std::span<const double> coeffs) {
  const std::size_t l = xs.size();
  if (l == 0) throw DomainError("check_subset_inequality: empty family");
  if (l > kMaxSubsetTerms) throw ResourceError("check_subset_inequality: more than 20 terms");
  if (coeffs.size() != l) throw PreconditionError("check_subset_inequality: one coefficient per term");
  for (double c : coeffs)
    if (!(std::abs(c) <= 1.0)) throw PreconditionError("check_subset_inequality: |c_k| > 1");
  for (const auto& e : xs) require_aligned(xs.front(), e);

  const std::size_t m = xs.front().size();
  std::vector<double> combo(m, 0.0);
  for (std::size_t k = 0; k < l; ++k)
    for (std::size_t p = 0; p < m; ++p) combo[p] += coeffs[k] * xs[k][p];
  const KyFanValue lhs = ky_fan(combo);

  const std::size_t subsets = std::size_t{1} << l;
  std::vector<double> norms(subsets, 0.0);
  parallel_for(subsets - 1, [&](std::size_t s) {
    const std::size_t mask = s + 1;
    std::vector<double> sum(m, 0.0);
    for (std::size_t k = 0; k < l; ++k)
      if (mask & (std::size_t{1} << k))
        for (std::size_t p = 0; p < m; ++p) sum[p] += xs[k][p];
    norms[mask] = ky_fan(sum).value;
  });
  const double max_norm = *std::max_element(norms.begin(), norms.end());
  const KyFanValue rhs{kSubsetConstant * max_norm};
  const double ratio = rhs.value > 0.0 ? lhs.value / rhs.value
                                       : (lhs.value > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return {lhs, rhs, ratio, lhs.value <= rhs.value};
}

}  // namespace stochint
