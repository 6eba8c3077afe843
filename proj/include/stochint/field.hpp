#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "stochint/error.hpp"
#include "stochint/prob_core.hpp"

namespace stochint {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  double midpoint() const { return 0.5 * (lo + hi); }
};

/// Closed axis-aligned box prod [a_i, b_i]; its Jordan content is the product of side lengths.
class Box {
 public:
  Box() = default;

  explicit Box(std::vector<Interval> axes) : axes_(std::move(axes)) {
    for (const auto& iv : axes_)
      if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
        throw DomainError("Box: every axis needs finite a_i <= b_i");
  }

  Box(std::initializer_list<Interval> axes) : Box(std::vector<Interval>(axes)) {}

  static Box cube(std::size_t dim, double lo, double hi) {
    return Box(std::vector<Interval>(dim, Interval{lo, hi}));
  }

  std::size_t dim() const { return axes_.size(); }
  const Interval& operator[](std::size_t axis) const { return axes_[axis]; }
  std::span<const Interval> axes() const { return axes_; }

  double volume() const {
    double v = 1.0;
    for (const auto& iv : axes_) v *= iv.length();
    return v;
  }

  double diameter() const {
    double s = 0.0;
    for (const auto& iv : axes_) s += iv.length() * iv.length();
    return std::sqrt(s);
  }

  bool contains(std::span<const double> x, double slack = 1e-12) const {
    if (x.size() != axes_.size()) return false;
    for (std::size_t i = 0; i < axes_.size(); ++i) {
      const double pad = slack * std::max(1.0, axes_[i].length());
      if (x[i] < axes_[i].lo - pad || x[i] > axes_[i].hi + pad) return false;
    }
    return true;
  }

  bool contains(const Box& inner) const {
    if (inner.dim() != dim()) return false;
    for (std::size_t i = 0; i < axes_.size(); ++i)
      if (inner[i].lo < axes_[i].lo || inner[i].hi > axes_[i].hi) return false;
    return true;
  }

  // Cartesian product B x S (axes of S appended).
  Box product(const Box& other) const {
    std::vector<Interval> axes = axes_;
    axes.insert(axes.end(), other.axes_.begin(), other.axes_.end());
    return Box(std::move(axes));
  }

  std::pair<Box, Box> split(std::size_t axis, double at) const {
    if (axis >= dim() || at < axes_[axis].lo || at > axes_[axis].hi)
      throw DomainError("Box::split: cut outside the box");
    std::vector<Interval> lo = axes_, hi = axes_;
    lo[axis].hi = at;
    hi[axis].lo = at;
    return {Box(std::move(lo)), Box(std::move(hi))};
  }

 private:
  std::vector<Interval> axes_;
};

/// A random function x -> xi(x) in L0, realised path by path on one ProbSpace.
///
/// The evaluator fills `out` (length M) with xi(x, omega_k). It must be pure
/// and safe to call concurrently.
class RandomField {
 public:
  using Evaluator = std::function<void(std::span<const double> x, std::span<double> out)>;

  RandomField(std::size_t paths, std::uint64_t space_id, std::size_t dim, Evaluator eval,
              std::optional<Box> domain = std::nullopt)
      : paths_(paths), space_id_(space_id), dim_(dim), eval_(std::move(eval)), domain_(std::move(domain)) {
    if (domain_ && domain_->dim() != dim_) throw DomainError("RandomField: domain dimension mismatch");
  }

  RandomField(const ProbSpace& space, std::size_t dim, Evaluator eval, std::optional<Box> domain = std::nullopt)
      : RandomField(space.paths(), space.id(), dim, std::move(eval), std::move(domain)) {}

  std::size_t dim() const { return dim_; }
  std::size_t paths() const { return paths_; }
  std::uint64_t space_id() const { return space_id_; }
  const std::optional<Box>& domain() const { return domain_; }

  void evaluate_into(std::span<const double> x, std::span<double> out) const {
    if (x.size() != dim_) throw DomainError("RandomField: point has wrong dimension");
    if (domain_ && !domain_->contains(x)) throw DomainError("RandomField: point outside the declared domain");
    eval_(x, out);
  }

  Ensemble operator()(std::span<const double> x) const {
    std::vector<double> out(paths_);
    evaluate_into(x, out);
    return Ensemble(space_id_, std::move(out));
  }

  Ensemble operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

  /// The field x -> w(x) xi(x) for a deterministic weight w.
  RandomField weighted(std::function<double(std::span<const double>)> w) const {
    auto self = *this;
    return RandomField(paths_, space_id_, dim_,
                       [self, w = std::move(w)](std::span<const double> x, std::span<double> out) {
                         self.eval_(x, out);
                         const double s = w(x);
                         for (double& v : out) v *= s;
                       },
                       domain_);
  }

  /// Deterministic field: the same value on every path.
  static RandomField deterministic(const ProbSpace& space, std::size_t dim,
                                   std::function<double(std::span<const double>)> f,
                                   std::optional<Box> domain = std::nullopt) {
    return RandomField(space, dim,
                       [f = std::move(f)](std::span<const double> x, std::span<double> out) {
                         std::fill(out.begin(), out.end(), f(x));
                       },
                       std::move(domain));
  }

  /// xi(x) = g(x) * eta, one random variable modulated by a deterministic profile.
  static RandomField separable(const Ensemble& eta, std::size_t dim,
                               std::function<double(std::span<const double>)> g = nullptr,
                               std::optional<Box> domain = std::nullopt) {
    std::vector<double> samples(eta.samples().begin(), eta.samples().end());
    return RandomField(eta.size(), eta.space_id(), dim,
                       [samples = std::move(samples), g = std::move(g)](std::span<const double> x,
                                                                        std::span<double> out) {
                         const double s = g ? g(x) : 1.0;
                         for (std::size_t k = 0; k < out.size(); ++k) out[k] = s * samples[k];
                       },
                       std::move(domain));
  }

  friend RandomField operator+(const RandomField& a, const RandomField& b) {
    if (a.space_id_ != b.space_id_ || a.paths_ != b.paths_ || a.dim_ != b.dim_)
      throw AlignmentError("RandomField sum across different spaces or dimensions");
    return RandomField(a.paths_, a.space_id_, a.dim_,
                       [a, b](std::span<const double> x, std::span<double> out) {
                         std::vector<double> tmp(out.size());
                         a.eval_(x, out);
                         b.eval_(x, tmp);
                         for (std::size_t k = 0; k < out.size(); ++k) out[k] += tmp[k];
                       },
                       a.domain_);
  }

 private:
  std::size_t paths_;
  std::uint64_t space_id_;
  std::size_t dim_;
  Evaluator eval_;
  std::optional<Box> domain_;
};

}  // namespace stochint
