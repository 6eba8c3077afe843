#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stochint/error.hpp"
#include "stochint/field.hpp"
#include "stochint/parallel.hpp"
#include "stochint/prob_core.hpp"

namespace stochint {

enum class TagRule { center, left, random };

inline const char* to_string(TagRule r) {
  switch (r) {
    case TagRule::center: return "center";
    case TagRule::left: return "left";
    case TagRule::random: return "random";
  }
  return "unknown";
}

inline constexpr int kMaxAxisLevel = 12;
inline constexpr int kMaxTotalLevel = 20;

/// Dyadic tagged partition of a box: axis i is cut into 2^levels[i] equal cells.
///
/// Cells are enumerated with axis 0 varying slowest. Random tags are drawn
/// once per cell from a stream keyed by (seed, cell index), so they are the
/// same on every path.
class TaggedPartition {
 public:
  TaggedPartition(Box box, std::vector<int> levels, TagRule rule, std::uint64_t seed = 0)
      : box_(std::move(box)), levels_(std::move(levels)), rule_(rule), seed_(seed) {
    if (levels_.size() != box_.dim()) throw DomainError("TaggedPartition: one level per axis");
    int total = 0;
    for (int l : levels_) {
      if (l < 0) throw GridError("TaggedPartition: negative level");
      if (l > kMaxAxisLevel) throw ResourceError("TaggedPartition: level above 12 on one axis");
      total += l;
    }
    if (total > kMaxTotalLevel) throw ResourceError("TaggedPartition: more than 2^20 cells");
    count_ = std::size_t{1} << total;
    for (std::size_t i = 0; i < box_.dim(); ++i)
      width_.push_back(box_[i].length() / static_cast<double>(std::size_t{1} << levels_[i]));
  }

  const Box& box() const { return box_; }
  std::span<const int> levels() const { return levels_; }
  TagRule rule() const { return rule_; }
  std::size_t cell_count() const { return count_; }

  // All cells have the same Jordan content; the contents sum to m(B).
  double cell_volume() const { return box_.volume() / static_cast<double>(count_); }

  double mesh() const {
    double s = 0.0;
    for (double w : width_) s += w * w;
    return std::sqrt(s);
  }

  Box cell(std::size_t index) const {
    std::vector<Interval> axes(box_.dim());
    auto idx = multi_index(index);
    for (std::size_t i = 0; i < axes.size(); ++i) {
      const double lo = box_[i].lo + static_cast<double>(idx[i]) * width_[i];
      axes[i] = {lo, idx[i] + 1 == (std::size_t{1} << levels_[i]) ? box_[i].hi : lo + width_[i]};
    }
    return Box(std::move(axes));
  }

  void tag(std::size_t index, std::span<double> out) const {
    auto idx = multi_index(index);
    std::optional<Stream> s;
    if (rule_ == TagRule::random) s.emplace(seed_, index, stream_tag::random_tags);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      double frac = 0.5;
      if (rule_ == TagRule::left) frac = 0.0;
      if (rule_ == TagRule::random) frac = s->uniform();
      out[i] = std::min(box_[i].hi, box_[i].lo + (static_cast<double>(idx[i]) + frac) * width_[i]);
    }
  }

 private:
  std::vector<std::size_t> multi_index(std::size_t index) const {
    std::vector<std::size_t> idx(levels_.size());
    for (std::size_t i = levels_.size(); i-- > 0;) {
      idx[i] = index & ((std::size_t{1} << levels_[i]) - 1);
      index >>= levels_[i];
    }
    return idx;
  }

  Box box_;
  std::vector<int> levels_;
  TagRule rule_;
  std::uint64_t seed_;
  std::size_t count_ = 1;
  std::vector<double> width_;
};

inline TaggedPartition dyadic_partition(const Box& box, int level, TagRule rule = TagRule::center,
                                        std::uint64_t seed = 0) {
  return TaggedPartition(box, std::vector<int>(box.dim(), level), rule, seed);
}

/// Per-path tagged sum sum_k xi(x_k) m(B_k).
inline Ensemble riemann_sum(const RandomField& f, const TaggedPartition& part) {
  if (f.dim() != part.box().dim()) throw DomainError("riemann_sum: field and box dimensions differ");
  const std::size_t m = f.paths();
  const std::size_t d = f.dim();
  std::vector<double> total = chunked_sum(part.cell_count(), m, [&](std::size_t i, std::span<double> acc) {
    std::vector<double> x(d), values(m);
    part.tag(i, x);
    f.evaluate_into(x, values);
    for (std::size_t p = 0; p < m; ++p) acc[p] += values[p];
  });
  const double vol = part.cell_volume();
  for (double& v : total) v *= vol;
  return Ensemble(f.space_id(), std::move(total));
}

struct IntegrationOptions {
  int max_level = 8;
  double tol = 0.02;
  std::vector<int> axis_offsets;  // per-axis level = level + offset; empty means all zero
  std::uint64_t tag_seed = 0;
};

struct LevelDistance {
  int level;        // the finer of the two compared levels
  double distance;  // Ky Fan distance between the two level sums
};

/// Diagnostics behind an accept/reject decision for a limit in probability.
struct ConvergenceReport {
  std::vector<LevelDistance> cauchy;
  double cross_random = 0.0;  // center vs random tags at the finest level
  double cross_left = 0.0;    // center vs left-corner tags (reported, O(mesh) bias)
  double refinement = 0.0;    // improper integrals: final box at one coarser mesh
  double tol = 0.02;
  bool accepted = false;

  double last_distance() const { return cauchy.empty() ? 0.0 : cauchy.back().distance; }
};

struct IntegralResult {
  Ensemble value;
  ConvergenceReport report;
};

namespace detail {

inline std::vector<int> axis_levels(std::size_t dim, int level, const std::vector<int>& offsets) {
  if (!offsets.empty() && offsets.size() != dim) throw DomainError("axis_offsets: one offset per axis");
  std::vector<int> out(dim, level);
  for (std::size_t i = 0; i < offsets.size(); ++i) out[i] += offsets[i];
  return out;
}

inline void check_budget(std::size_t dim, int level, const std::vector<int>& offsets) {
  auto levels = axis_levels(dim, level, offsets);
  int total = 0;
  for (int l : levels) {
    if (l > kMaxAxisLevel) throw ResourceError("integration budget: level above 12 on one axis");
    total += std::max(l, 0);
  }
  if (total > kMaxTotalLevel) throw ResourceError("integration budget: more than 2^20 cells");
}

}  // namespace detail

/// Riemann integral of a random field over a box as a limit in probability.
///
/// Center-tag sums at levels L-2, L-1, L give the Cauchy distances; the
/// finest level is re-tagged with seeded random tags (and left corners, for
/// the record). Accepted iff the last two Cauchy distances and the random-tag
/// cross-check are all <= tol.
inline IntegralResult riemann_integral(const RandomField& f, const Box& box, const IntegrationOptions& opts = {}) {
  const int top = opts.max_level;
  detail::check_budget(box.dim(), top, opts.axis_offsets);
  auto levels_at = [&](int l) { return detail::axis_levels(box.dim(), l, opts.axis_offsets); };
  for (int l : levels_at(top - 2))
    if (l < 0) throw GridError("riemann_integral: max_level too small for a three-level study");

  std::vector<Ensemble> sums;
  for (int l = top - 2; l <= top; ++l)
    sums.push_back(riemann_sum(f, TaggedPartition(box, levels_at(l), TagRule::center)));

  ConvergenceReport rep;
  rep.tol = opts.tol;
  for (std::size_t i = 1; i < sums.size(); ++i)
    rep.cauchy.push_back({top - 2 + static_cast<int>(i), ky_fan_distance(sums[i - 1], sums[i]).value});
  const Ensemble random = riemann_sum(f, TaggedPartition(box, levels_at(top), TagRule::random, opts.tag_seed));
  const Ensemble left = riemann_sum(f, TaggedPartition(box, levels_at(top), TagRule::left));
  rep.cross_random = ky_fan_distance(sums.back(), random).value;
  rep.cross_left = ky_fan_distance(sums.back(), left).value;
  rep.accepted = std::all_of(rep.cauchy.begin(), rep.cauchy.end(),
                             [&](const LevelDistance& c) { return c.distance <= opts.tol; }) &&
                 rep.cross_random <= opts.tol;
  return {sums.back(), std::move(rep)};
}

/// Integral over the product box B x S (axes of S appended).
inline IntegralResult product_integral(const RandomField& f, const Box& b, const Box& s,
                                       const IntegrationOptions& opts = {}) {
  const Box prod = b.product(s);
  if (f.dim() != prod.dim()) throw DomainError("product_integral: field dimension != dim B + dim S");
  return riemann_integral(f, prod, opts);
}

/// Growing boxes center +- L0 2^j (j = 0..steps-1) at constant mesh:
/// B^(j) is cut at dyadic level base_level + j on every axis.
struct Exhaustion {
  std::vector<double> center;
  double half_width0 = 1.0;
  int steps = 4;
  int base_level = 6;

  /// Exhaustion whose last box has half-width `radius`.
  static Exhaustion to_radius(std::vector<double> center, double radius, int steps, int final_level) {
    if (steps < 2) throw ParameterError("Exhaustion: at least two boxes");
    return {std::move(center), radius / std::ldexp(1.0, steps - 1), steps, final_level - (steps - 1)};
  }

  std::size_t dim() const { return center.size(); }
  double half_width(int j) const { return half_width0 * std::ldexp(1.0, j); }
  int level(int j) const { return base_level + j; }

  Box box(int j) const {
    std::vector<Interval> axes;
    for (double c : center) axes.push_back({c - half_width(j), c + half_width(j)});
    return Box(std::move(axes));
  }

  void validate() const {
    if (center.empty()) throw DomainError("Exhaustion: empty center");
    if (!(half_width0 > 0.0)) throw ParameterError("Exhaustion: L0 must be positive");
    if (steps < 2) throw ParameterError("Exhaustion: at least two boxes");
    if (base_level < 1) throw GridError("Exhaustion: base level must be >= 1");
    detail::check_budget(dim(), level(steps - 1), {});
  }
};

/// Improper integral over R^d as the limit over an exhaustion.
///
/// Accepted iff the distance between the last two exhaustion integrals, the
/// final box at one coarser mesh, and the random-tag cross-check are <= tol.
inline IntegralResult improper_integral(const RandomField& f, const Exhaustion& e, const IntegrationOptions& opts = {}) {
  e.validate();
  if (f.dim() != e.dim()) throw DomainError("improper_integral: field and exhaustion dimensions differ");
  std::optional<Ensemble> prev;
  ConvergenceReport rep;
  rep.tol = opts.tol;
  for (int j = 0; j < e.steps; ++j) {
    Ensemble cur = riemann_sum(f, dyadic_partition(e.box(j), e.level(j)));
    if (prev) rep.cauchy.push_back({j, ky_fan_distance(*prev, cur).value});
    prev.emplace(std::move(cur));
  }
  const Box last = e.box(e.steps - 1);
  const int lvl = e.level(e.steps - 1);
  rep.refinement = ky_fan_distance(*prev, riemann_sum(f, dyadic_partition(last, lvl - 1))).value;
  rep.cross_random = ky_fan_distance(*prev, riemann_sum(f, dyadic_partition(last, lvl, TagRule::random, opts.tag_seed))).value;
  rep.cross_left = ky_fan_distance(*prev, riemann_sum(f, dyadic_partition(last, lvl, TagRule::left))).value;
  rep.accepted = rep.last_distance() <= opts.tol && rep.refinement <= opts.tol && rep.cross_random <= opts.tol;
  return {std::move(*prev), std::move(rep)};
}

// ---- deterministic quadrature ------------------------------------------------

/// Composite Simpson rule with an even number of panels.
template <class G>
double simpson(G&& g, double a, double b, std::size_t panels) {
  if (panels == 0 || panels % 2) throw GridError("simpson: panel count must be even and positive");
  const double h = (b - a) / static_cast<double>(panels);
  double s = g(a) + g(b);
  for (std::size_t i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + static_cast<double>(i) * h);
  return s * h / 3.0;
}

/// Tensor-product Simpson rule with 2^level panels per axis.
inline double classical_integral(const std::function<double(std::span<const double>)>& g, const Box& box,
                                 int level = 8) {
  const std::size_t d = box.dim();
  if (d == 0) throw DomainError("classical_integral: zero-dimensional box");
  const std::size_t panels = std::size_t{1} << std::max(level, 1);
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= panels + 1;
  std::vector<double> h(d);
  for (std::size_t i = 0; i < d; ++i) h[i] = box[i].length() / static_cast<double>(panels);
  auto weight = [&](std::size_t j) { return (j == 0 || j == panels) ? 1.0 : (j % 2 ? 4.0 : 2.0); };
  std::vector<double> sums = chunked_sum(total, 1, [&](std::size_t idx, std::span<double> acc) {
    std::vector<double> x(d);
    double w = 1.0;
    for (std::size_t i = d; i-- > 0;) {
      const std::size_t j = idx % (panels + 1);
      idx /= panels + 1;
      x[i] = box[i].lo + static_cast<double>(j) * h[i];
      w *= weight(j) * h[i] / 3.0;
    }
    acc[0] += w * g(x);
  });
  return sums[0];
}

// ---- slices --------------------------------------------------------------------

/// s -> f(x, s) for fixed leading coordinates x.
inline RandomField fix_leading(const RandomField& f, std::vector<double> x, std::optional<Box> domain = std::nullopt) {
  if (x.size() >= f.dim()) throw DomainError("fix_leading: nothing left to vary");
  const std::size_t rest = f.dim() - x.size();
  return RandomField(
      f.paths(), f.space_id(), rest,
      [f, x = std::move(x)](std::span<const double> s, std::span<double> out) {
        std::vector<double> full(x);
        full.insert(full.end(), s.begin(), s.end());
        f.evaluate_into(full, out);
      },
      std::move(domain));
}

/// x -> f(x, s) for fixed trailing coordinates s.
inline RandomField fix_trailing(const RandomField& f, std::vector<double> s, std::optional<Box> domain = std::nullopt) {
  if (s.size() >= f.dim()) throw DomainError("fix_trailing: nothing left to vary");
  const std::size_t rest = f.dim() - s.size();
  return RandomField(
      f.paths(), f.space_id(), rest,
      [f, s = std::move(s)](std::span<const double> x, std::span<double> out) {
        std::vector<double> full(x.begin(), x.end());
        full.insert(full.end(), s.begin(), s.end());
        f.evaluate_into(full, out);
      },
      std::move(domain));
}

// ---- a stochastically continuous field that is not integrable --------------------

struct PathologicalParams {
  double base = 5.0;  // xi_k = base^k 1_{F_k}
  int k_max = 20;
};

/// xi on [0, 1] with xi = xi_k on [2^{-2k-1}, 2^{-2k}], linear in between,
/// xi(0) = 0, xi_k = base^k 1_{F_k} with independent P(F_k) = 1/k.
/// On [1/4, 1] the field equals xi_1; levels above k_max are 0.
inline RandomField build_pathological_field(const ProbSpace& space, const PathologicalParams& params = {}) {
  if (params.k_max < 1) throw ParameterError("pathological field: k_max >= 1");
  const std::size_t m = space.paths();
  const int kmax = params.k_max;
  auto levels = std::make_shared<std::vector<double>>(static_cast<std::size_t>(kmax) * m);
  parallel_for(m, [&](std::size_t p) {
    Stream s = space.stream(p, stream_tag::pathological);
    for (int k = 1; k <= kmax; ++k) {
      const bool hit = s.uniform() * k < 1.0;
      (*levels)[(k - 1) * m + p] = hit ? std::pow(params.base, k) : 0.0;
    }
  });
  auto xi_k = [levels = std::shared_ptr<const std::vector<double>>(levels), m, kmax](int k, std::size_t p) {
    return (k >= 1 && k <= kmax) ? (*levels)[(k - 1) * m + p] : 0.0;
  };
  return RandomField(
      space, 1,
      [xi_k, kmax](std::span<const double> xs, std::span<double> out) {
        const double x = xs[0];
        if (x >= 0.25) {
          for (std::size_t p = 0; p < out.size(); ++p) out[p] = xi_k(1, p);
          return;
        }
        if (x <= 0.0) {
          std::fill(out.begin(), out.end(), 0.0);
          return;
        }
        // Find k >= 1 with 2^{-2k-2} <= x < 2^{-2k}.
        int k = 1;
        while (k <= kmax + 1 && x < std::ldexp(1.0, -2 * k - 2)) ++k;
        if (k > kmax + 1) {
          std::fill(out.begin(), out.end(), 0.0);
          return;
        }
        const double plateau_lo = std::ldexp(1.0, -2 * k - 1);
        if (x >= plateau_lo) {
          for (std::size_t p = 0; p < out.size(); ++p) out[p] = xi_k(k, p);
          return;
        }
        const double lo = std::ldexp(1.0, -2 * k - 2);
        const double w = (x - lo) / (plateau_lo - lo);  // 0 at xi_{k+1}, 1 at xi_k
        for (std::size_t p = 0; p < out.size(); ++p) out[p] = (1.0 - w) * xi_k(k + 1, p) + w * xi_k(k, p);
      },
      Box{{0.0, 1.0}});
}

struct PathologicalRow {
  int n;
  Ensemble scaled;  // (1/n) int_{A_n} xi dx
  KyFanValue norm;
};

inline constexpr int kMaxPathologicalN = 12;

/// (1/n) int over A_n = union_{k <= n} [2^{-2k-1}, 2^{-2k}] for n = 1..n_max.
/// Each plateau is integrated by a center-tag Riemann sum at `level`.
inline std::vector<PathologicalRow> pathological_demo(const ProbSpace& space, int n_max,
                                                      const PathologicalParams& params = {}, int level = 4) {
  if (n_max < 1 || n_max > kMaxPathologicalN) throw ParameterError("pathological_demo: n_max must be in [1, 12]");
  const RandomField xi = build_pathological_field(space, params);
  std::vector<PathologicalRow> rows;
  std::optional<Ensemble> running;
  for (int n = 1; n <= n_max; ++n) {
    const Box plateau{{std::ldexp(1.0, -2 * n - 1), std::ldexp(1.0, -2 * n)}};
    Ensemble piece = riemann_sum(xi, dyadic_partition(plateau, level));
    running = running ? *running + piece : piece;
    Ensemble scaled = (1.0 / n) * *running;
    const KyFanValue norm = ky_fan(scaled);
    rows.push_back({n, std::move(scaled), norm});
  }
  return rows;
}

}  // namespace stochint
