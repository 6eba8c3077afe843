#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stochint/drivers.hpp"
#include "stochint/error.hpp"
#include "stochint/field.hpp"
#include "stochint/prob_core.hpp"
#include "stochint/riemann.hpp"

namespace stochint {

struct ResidualTrace {
  int level;
  double residual;
};

/// Both sides of an identity, computed independently, and their Ky Fan distance.
struct IdentityResidual {
  Ensemble lhs;
  Ensemble rhs;
  KyFanValue residual;
  std::vector<ResidualTrace> trace;  // one entry per refinement level, finest last
  double threshold = 0.0;            // max(tol, 2/sqrt(M))
  bool passed = false;
  bool trace_nonincreasing = false;  // within the 2/sqrt(M) sampling band
};

struct IdentityOptions {
  int level = 8;
  int trace_levels = 3;
  double tol = 0.02;
  std::uint64_t tag_seed = 0;
};

/// h(x, s) with x in the spatial box and s in [0, T].
using SpaceTimeFunction = std::function<double(std::span<const double> x, double s)>;

namespace detail {

inline double sampling_band(std::size_t paths) { return 2.0 / std::sqrt(static_cast<double>(paths)); }

// Sub-integral reports inside an identity use the same resolution floor as the residual.
inline double report_tol(const IdentityOptions& opts, std::size_t paths) {
  return std::max(opts.tol, sampling_band(paths));
}

inline void require_accepted(const ConvergenceReport& rep, const char* what, bool enforce = true) {
  if (enforce && !rep.accepted)
    throw InconclusiveError(std::string(what) + ": convergence report rejected (last distance " +
                            std::to_string(rep.last_distance()) + ", cross-check " +
                            std::to_string(rep.cross_random) + ", tol " + std::to_string(rep.tol) + ")");
}

template <class Side>
IdentityResidual trace_identity(const IdentityOptions& opts, std::size_t paths, Side&& side) {
  if (opts.trace_levels < 1) throw ParameterError("identity: trace_levels >= 1");
  IdentityResidual out{Ensemble(0, {}), Ensemble(0, {}), {}, {}, 0.0, false, false};
  for (int l = opts.level - opts.trace_levels + 1; l <= opts.level; ++l) {
    auto [lhs, rhs] = side(l);
    const KyFanValue r = ky_fan_distance(lhs, rhs);
    out.trace.push_back({l, r.value});
    out.lhs = std::move(lhs);
    out.rhs = std::move(rhs);
    out.residual = r;
  }
  const double band = sampling_band(paths);
  out.threshold = std::max(opts.tol, band);
  out.passed = out.residual.value <= out.threshold;
  out.trace_nonincreasing = true;
  for (std::size_t i = 1; i < out.trace.size(); ++i)
    if (out.trace[i].residual > out.trace[i - 1].residual + band) out.trace_nonincreasing = false;
  return out;
}

// x -> int h(x, s) dmu(s), left-point sums on the given (already coarsened) driver.
inline RandomField det_integral_field(const Driver& coarse, SpaceTimeFunction h, std::size_t dim,
                                      std::optional<Box> domain) {
  return RandomField(
      coarse.paths(), coarse.space_id(), dim,
      [coarse, h = std::move(h)](std::span<const double> x, std::span<double> out) {
        const std::size_t n = coarse.grid_size();
        const double dt = coarse.cell();
        std::vector<double> w(n);
        for (std::size_t j = 0; j < n; ++j) w[j] = h(x, static_cast<double>(j) * dt);
        for (std::size_t p = 0; p < out.size(); ++p) {
          auto inc = coarse.increments(p);
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += w[j] * inc[j];
          out[p] = s;
        }
      },
      std::move(domain));
}

inline void require_driver_level(const Driver& d, int level) {
  if (level > d.level()) throw GridError("identity level exceeds the driver grid (log2 n)");
}

// u -> int_0^u xi(v) dv by a lean center-tag sum at `level`.
inline RandomField running_integral(const RandomField& f, double s, int level) {
  return RandomField(
      f.paths(), f.space_id(), 1,
      [f, level](std::span<const double> u, std::span<double> out) {
        const Ensemble v = riemann_sum(f, dyadic_partition(Box{{0.0, u[0]}}, level));
        std::copy(v.samples().begin(), v.samples().end(), out.begin());
      },
      Box{{0.0, s}});
}

}  // namespace detail

/// int_B dx int h(x,s) dmu(s)  versus  int dmu(s) int_B h(x,s) dx.
///
/// The left side goes through the random-field Riemann pipeline; the right
/// side integrates a deterministic Simpson inner integral against the same
/// driver realization. Domination of h is the caller's responsibility.
inline IdentityResidual fubini_residual(const Driver& d, const SpaceTimeFunction& h, const Box& b,
                                        const IdentityOptions& opts = {}) {
  detail::require_driver_level(d, opts.level);
  return detail::trace_identity(opts, d.paths(), [&](int level) {
    const Driver coarse = d.coarsened(level);
    const RandomField inner = detail::det_integral_field(coarse, h, b.dim(), b);
    const IntegralResult lhs = riemann_integral(inner, b, {level, detail::report_tol(opts, d.paths()), {}, opts.tag_seed});
    detail::require_accepted(lhs.report, "fubini lhs", level == opts.level);
    const Ensemble rhs = integrate_det(
        coarse,
        [&](double s) {
          return classical_integral([&](std::span<const double> x) { return h(x, s); }, b, 6);
        },
        level);
    return std::pair{lhs.value, rhs};
  });
}

/// Improper version over R^d: the exhaustion mesh follows the trace level.
inline IdentityResidual fubini_improper_residual(const Driver& d, const SpaceTimeFunction& h, const Exhaustion& e,
                                                 const IdentityOptions& opts = {}) {
  detail::require_driver_level(d, opts.level);
  return detail::trace_identity(opts, d.paths(), [&](int level) {
    Exhaustion ex = e;
    ex.base_level = e.base_level + (level - opts.level);
    const Driver coarse = d.coarsened(level);
    const RandomField inner = detail::det_integral_field(coarse, h, ex.dim(), std::nullopt);
    const IntegralResult lhs = improper_integral(inner, ex, {level, detail::report_tol(opts, d.paths()), {}, opts.tag_seed});
    detail::require_accepted(lhs.report, "improper fubini lhs", level == opts.level);
    const Box last = ex.box(ex.steps - 1);
    const Ensemble rhs = integrate_det(
        coarse,
        [&](double s) {
          return classical_integral([&](std::span<const double> x) { return h(x, s); }, last, 8);
        },
        level);
    return std::pair{lhs.value, rhs};
  });
}

/// Residuals of the product integral against both iterated orders.
struct ProductResiduals {
  IdentityResidual x_outer;  // int_B dx int_S f ds
  IdentityResidual s_outer;  // int_S ds int_B f dx
};

namespace detail {

inline std::vector<double> box_center(const Box& b) {
  std::vector<double> c;
  for (const auto& iv : b.axes()) c.push_back(iv.midpoint());
  return c;
}

inline std::vector<double> box_corner(const Box& b) {
  std::vector<double> c;
  for (const auto& iv : b.axes()) c.push_back(iv.lo);
  return c;
}

// Slice integrability is checked with full reports on a few probe slices.
inline void probe_slices(const RandomField& f, const Box& b, const Box& s, int level, double tol) {
  for (const auto& x : {box_center(b), box_corner(b)}) {
    auto r = riemann_integral(fix_leading(f, x, s), s, {level, tol, {}, 0});
    require_accepted(r.report, "product slice over S");
  }
  for (const auto& y : {box_center(s), box_corner(s)}) {
    auto r = riemann_integral(fix_trailing(f, y, b), b, {level, tol, {}, 0});
    require_accepted(r.report, "product slice over B");
  }
}

}  // namespace detail

/// Product integral over B x S compared with the two iterated integrals.
/// Inner integrals run one level finer so the iterated sums differ from the product sum.
inline ProductResiduals iterated_product_residual(const RandomField& f, const Box& b, const Box& s,
                                                  const IdentityOptions& opts = {}) {
  if (f.dim() != b.dim() + s.dim()) throw DomainError("iterated_product_residual: field dimension != dim B + dim S");
  detail::probe_slices(f, b, s, opts.level, detail::report_tol(opts, f.paths()));
  std::vector<Ensemble> products;
  auto product_at = [&](int level) -> const Ensemble& {
    const std::size_t idx = static_cast<std::size_t>(level - (opts.level - opts.trace_levels + 1));
    if (products.size() <= idx) {
      auto r = product_integral(f, b, s, {level, detail::report_tol(opts, f.paths()), {}, opts.tag_seed});
      detail::require_accepted(r.report, "product integral", level == opts.level);
      products.push_back(r.value);
    }
    return products[idx];
  };
  ProductResiduals out{
      detail::trace_identity(opts, f.paths(),
                             [&](int level) {
                               const RandomField outer(
                                   f.paths(), f.space_id(), b.dim(),
                                   [&f, &s, level](std::span<const double> x, std::span<double> o) {
                                     const auto v = riemann_sum(
                                         fix_leading(f, std::vector<double>(x.begin(), x.end())),
                                         dyadic_partition(s, level + 1));
                                     std::copy(v.samples().begin(), v.samples().end(), o.begin());
                                   },
                                   b);
                               auto it = riemann_integral(outer, b, {level, detail::report_tol(opts, f.paths()), {}, opts.tag_seed});
                               detail::require_accepted(it.report, "iterated integral (x outer)", level == opts.level);
                               return std::pair{product_at(level), it.value};
                             }),
      detail::trace_identity(opts, f.paths(), [&](int level) {
        const RandomField outer(
            f.paths(), f.space_id(), s.dim(),
            [&f, &b, level](std::span<const double> y, std::span<double> o) {
              const auto v = riemann_sum(fix_trailing(f, std::vector<double>(y.begin(), y.end())),
                                         dyadic_partition(b, level + 1));
              std::copy(v.samples().begin(), v.samples().end(), o.begin());
            },
            s);
        auto it = riemann_integral(outer, s, {level, detail::report_tol(opts, f.paths()), {}, opts.tag_seed});
        detail::require_accepted(it.report, "iterated integral (s outer)", level == opts.level);
        return std::pair{product_at(level), it.value};
      })};
  return out;
}

/// Improper product version: B = R^d exhausted by `e`, S a bounded box.
inline ProductResiduals iterated_product_improper_residual(const RandomField& f, const Exhaustion& e, const Box& s,
                                                           const IdentityOptions& opts = {}) {
  e.validate();
  const std::size_t dx = e.dim();
  if (f.dim() != dx + s.dim()) throw DomainError("iterated_product_improper_residual: dimension mismatch");
  auto shifted = [&](int level) {
    Exhaustion ex = e;
    ex.base_level = e.base_level + (level - opts.level);
    return ex;
  };
  std::vector<Ensemble> products;
  auto product_at = [&](int level) -> const Ensemble& {
    const std::size_t idx = static_cast<std::size_t>(level - (opts.level - opts.trace_levels + 1));
    if (products.size() <= idx) {
      const Exhaustion ex = shifted(level);
      ConvergenceReport rep;
      rep.tol = detail::report_tol(opts, f.paths());
      std::optional<Ensemble> prev;
      for (int j = 0; j < ex.steps; ++j) {
        std::vector<int> levels(dx, ex.level(j));
        levels.insert(levels.end(), s.dim(), level);
        Ensemble cur = riemann_sum(f, TaggedPartition(ex.box(j).product(s), levels, TagRule::center));
        if (prev) rep.cauchy.push_back({j, ky_fan_distance(*prev, cur).value});
        prev.emplace(std::move(cur));
      }
      rep.accepted = rep.last_distance() <= rep.tol;
      detail::require_accepted(rep, "improper product integral", level == opts.level);
      products.push_back(*prev);
    }
    return products[idx];
  };
  ProductResiduals out{
      detail::trace_identity(opts, f.paths(),
                             [&](int level) {
                               const RandomField outer(
                                   f.paths(), f.space_id(), dx,
                                   [&f, &s, level](std::span<const double> x, std::span<double> o) {
                                     const auto v = riemann_sum(
                                         fix_leading(f, std::vector<double>(x.begin(), x.end())),
                                         dyadic_partition(s, level + 1));
                                     std::copy(v.samples().begin(), v.samples().end(), o.begin());
                                   });
                               auto it = improper_integral(outer, shifted(level), {level, detail::report_tol(opts, f.paths()), {}, opts.tag_seed});
                               detail::require_accepted(it.report, "iterated improper integral (x outer)", level == opts.level);
                               return std::pair{product_at(level), it.value};
                             }),
      detail::trace_identity(opts, f.paths(), [&](int level) {
        const Exhaustion ex = shifted(level);
        const Box last = ex.box(ex.steps - 1);
        const int last_level = ex.level(ex.steps - 1);
        const RandomField outer(
            f.paths(), f.space_id(), s.dim(),
            [&f, last, last_level](std::span<const double> y, std::span<double> o) {
              const auto v = riemann_sum(fix_trailing(f, std::vector<double>(y.begin(), y.end())),
                                         dyadic_partition(last, last_level + 1));
              std::copy(v.samples().begin(), v.samples().end(), o.begin());
            },
            s);
        auto it = riemann_integral(outer, s, {level, detail::report_tol(opts, f.paths()), {}, opts.tag_seed});
        detail::require_accepted(it.report, "iterated improper integral (s outer)", level == opts.level);
        return std::pair{product_at(level), it.value};
      })};
  return out;
}

/// int_0^s du int_0^u xi(v) dv  versus  int_0^s (s - v) xi(v) dv.
inline IdentityResidual triangle_identity_residual(const RandomField& f, double s, const IdentityOptions& opts = {}) {
  if (f.dim() != 1) throw DomainError("triangle identity: one-dimensional field required");
  if (!(s > 0.0)) throw DomainError("triangle identity: s must be positive");
  const Box whole{{0.0, s}};
  return detail::trace_identity(opts, f.paths(), [&](int level) {
    const IntegrationOptions io{level, detail::report_tol(opts, f.paths()), {}, opts.tag_seed};
    if (level == opts.level)
      for (double u : {0.5 * s, s})
        detail::require_accepted(riemann_integral(f, Box{{0.0, u}}, io).report, "triangle inner integral");
    auto lhs = riemann_integral(detail::running_integral(f, s, level), whole, io);
    detail::require_accepted(lhs.report, "triangle lhs", level == opts.level);
    auto rhs = riemann_integral(f.weighted([s](std::span<const double> v) { return s - v[0]; }), whole, io);
    detail::require_accepted(rhs.report, "triangle rhs", level == opts.level);
    return std::pair{lhs.value, rhs.value};
  });
}

/// g(s) int_0^s xi  versus  int_0^s g xi + int_0^s g'(u) du int_0^u xi, for C^1 g.
inline IdentityResidual parts_identity_residual(const RandomField& f, const std::function<double(double)>& g,
                                                const std::function<double(double)>& dg, double s,
                                                const IdentityOptions& opts = {}) {
  if (!g || !dg) throw PreconditionError("parts identity: g and its derivative are both required");
  if (f.dim() != 1) throw DomainError("parts identity: one-dimensional field required");
  if (!(s > 0.0)) throw DomainError("parts identity: s must be positive");
  const Box whole{{0.0, s}};
  return detail::trace_identity(opts, f.paths(), [&](int level) {
    const IntegrationOptions io{level, detail::report_tol(opts, f.paths()), {}, opts.tag_seed};
    auto base = riemann_integral(f, whole, io);
    detail::require_accepted(base.report, "parts: int xi", level == opts.level);
    auto weighted = riemann_integral(f.weighted([&g](std::span<const double> u) { return g(u[0]); }), whole, io);
    detail::require_accepted(weighted.report, "parts: int g xi", level == opts.level);
    auto nested = riemann_integral(
        detail::running_integral(f, s, level).weighted([&dg](std::span<const double> u) { return dg(u[0]); }), whole,
        io);
    detail::require_accepted(nested.report, "parts: int g' int xi", level == opts.level);
    return std::pair{g(s) * base.value, weighted.value + nested.value};
  });
}

}  // namespace stochint
