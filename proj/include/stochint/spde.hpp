#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stochint/drivers.hpp"
#include "stochint/error.hpp"
#include "stochint/fd_oracle.hpp"
#include "stochint/field.hpp"
#include "stochint/parabolic.hpp"
#include "stochint/prob_core.hpp"
#include "stochint/riemann.hpp"

namespace stochint {

using SpatialFunction = std::function<double(const Point&)>;

/// One term amplitude(omega) * profile(x) of the initial field.
struct InitialTerm {
  Ensemble amplitude;
  SpatialFunction profile;
};

/// Forcing f(x, s) = profile(x) time_factor(s) against one driving measure.
struct ForcingTerm {
  SpatialFunction profile;
  std::function<double(double)> time_factor;  // empty means 1
  Driver driver;

  double q(double s) const { return time_factor ? time_factor(s) : 1.0; }
};

struct ProblemData {
  std::vector<InitialTerm> initial;
  std::vector<ForcingTerm> forcing;

  std::size_t paths() const {
    if (!initial.empty()) return initial.front().amplitude.size();
    if (!forcing.empty()) return forcing.front().driver.paths();
    return 0;
  }

  std::uint64_t space_id() const {
    if (!initial.empty()) return initial.front().amplitude.space_id();
    if (!forcing.empty()) return forcing.front().driver.space_id();
    return 0;
  }

  void check_aligned() const {
    const std::uint64_t id = space_id();
    const std::size_t m = paths();
    for (const auto& t : initial)
      if (t.amplitude.space_id() != id || t.amplitude.size() != m)
        throw AlignmentError("ProblemData: initial amplitudes on different probability spaces");
    for (const auto& f : forcing)
      if (f.driver.space_id() != id || f.driver.paths() != m)
        throw AlignmentError("ProblemData: drivers on different probability spaces");
  }

  /// The initial field xi_0 as a random field on R^d.
  RandomField initial_field(int dim, std::size_t paths, std::uint64_t space_id) const {
    auto terms = initial;
    return RandomField(paths, space_id, static_cast<std::size_t>(dim),
                       [terms, dim](std::span<const double> x, std::span<double> out) {
                         const Point p{x[0], dim == 2 ? x[1] : 0.0};
                         std::fill(out.begin(), out.end(), 0.0);
                         for (const auto& t : terms) {
                           const double g = t.profile(p);
                           for (std::size_t k = 0; k < out.size(); ++k) out[k] += t.amplitude[k] * g;
                         }
                       });
  }
};

/// X(x, t) on a spatial grid at report times, with int_0^t X(x, s) ds alongside.
///
/// Values are stored [time][node][path]. Immutable once built.
class FieldSolution {
 public:
  struct Provenance {
    EllipticOperator op;
    std::shared_ptr<const ProblemData> data;
    int level;
    double dt;
  };

  FieldSolution(GridSpec grid, std::vector<double> times, std::size_t paths, std::uint64_t space_id,
                std::vector<double> values, std::vector<double> integrals, std::shared_ptr<const Provenance> prov)
      : grid_(grid),
        times_(std::move(times)),
        paths_(paths),
        space_id_(space_id),
        values_(std::move(values)),
        integrals_(std::move(integrals)),
        prov_(std::move(prov)) {}

  const GridSpec& grid() const { return grid_; }
  std::span<const double> times() const { return times_; }
  std::size_t paths() const { return paths_; }
  std::uint64_t space_id() const { return space_id_; }
  const Provenance& provenance() const { return *prov_; }
  int level() const { return prov_->level; }

  std::size_t time_index(double t) const {
    for (std::size_t i = 0; i < times_.size(); ++i)
      if (std::abs(times_[i] - t) <= 1e-12 * std::max(1.0, t)) return i;
    throw DomainError("FieldSolution: t is not a report time");
  }

  std::span<const double> samples(std::size_t ti, std::size_t node) const {
    return {values_.data() + (ti * grid_.size() + node) * paths_, paths_};
  }
  std::span<const double> integral_samples(std::size_t ti, std::size_t node) const {
    return {integrals_.data() + (ti * grid_.size() + node) * paths_, paths_};
  }
  Ensemble at(std::size_t ti, std::size_t node) const {
    auto s = samples(ti, node);
    return Ensemble(space_id_, std::vector<double>(s.begin(), s.end()));
  }
  std::span<const double> raw_values() const { return values_; }

  /// x -> X(x, t), linear (bilinear) interpolation between grid nodes.
  RandomField field_at(double t) const { return grid_field(values_, time_index(t)); }

  /// x -> int_0^t X(x, s) ds on the driver's time grid.
  RandomField time_integral_field(double t) const { return grid_field(integrals_, time_index(t)); }

  /// The solution plus a constant c (the time integral gains c t).
  FieldSolution shifted(double c) const {
    std::vector<double> v = values_, w = integrals_;
    const std::size_t block = grid_.size() * paths_;
    for (std::size_t ti = 0; ti < times_.size(); ++ti)
      for (std::size_t k = 0; k < block; ++k) {
        v[ti * block + k] += c;
        w[ti * block + k] += c * times_[ti];
      }
    return FieldSolution(grid_, times_, paths_, space_id_, std::move(v), std::move(w), prov_);
  }

 private:
  RandomField grid_field(const std::vector<double>& store, std::size_t ti) const {
    auto data = std::make_shared<std::vector<double>>(store.begin() + static_cast<long>(ti * grid_.size() * paths_),
                                                      store.begin() + static_cast<long>((ti + 1) * grid_.size() * paths_));
    const GridSpec g = grid_;
    const std::size_t m = paths_;
    return RandomField(
        m, space_id_, static_cast<std::size_t>(g.dim),
        [data = std::shared_ptr<const std::vector<double>>(data), g, m](std::span<const double> x, std::span<double> out) {
          auto locate = [&](int axis, double v, std::size_t& i, double& u) {
            const std::size_t n = g.counts[axis];
            const double pos = std::clamp((v - g.axes[axis].lo) / g.spacing(axis), 0.0, static_cast<double>(n - 1));
            i = std::min(static_cast<std::size_t>(pos), n - 2);
            u = pos - static_cast<double>(i);
          };
          std::size_t i = 0, j = 0;
          double u = 0.0, w = 0.0;
          locate(0, x[0], i, u);
          const double* d = data->data();
          if (g.dim == 1) {
            for (std::size_t p = 0; p < m; ++p) out[p] = (1.0 - u) * d[i * m + p] + u * d[(i + 1) * m + p];
            return;
          }
          locate(1, x[1], j, w);
          const std::size_t n1 = g.counts[1];
          for (std::size_t p = 0; p < m; ++p)
            out[p] = (1.0 - u) * ((1.0 - w) * d[(i * n1 + j) * m + p] + w * d[(i * n1 + j + 1) * m + p]) +
                     u * ((1.0 - w) * d[((i + 1) * n1 + j) * m + p] + w * d[((i + 1) * n1 + j + 1) * m + p]);
        },
        g.box());
  }

  GridSpec grid_;
  std::vector<double> times_;
  std::size_t paths_;
  std::uint64_t space_id_;
  std::vector<double> values_;
  std::vector<double> integrals_;
  std::shared_ptr<const Provenance> prov_;
};

namespace detail {

inline std::size_t aligned_steps(double t, double dt) {
  const double steps = t / dt;
  if (t < 0.0 || std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
    throw GridError("report time " + std::to_string(t) + " is not on the level-aligned driver grid");
  return static_cast<std::size_t>(std::llround(steps));
}

// Trapezoid weight of node m in 0..n on a grid of step dt.
inline double trapezoid_weight(std::size_t m, std::size_t n, double dt) {
  return (m == 0 || m == n) ? 0.5 * dt : dt;
}

}  // namespace detail

/// X(x, t) = S(t) xi_0(x) + sum_i int_[0,t) [S(t - s) f_i(x, s)] dmu_i(s) with
/// left-point sums on the level grid; any number of driving measures.
///
/// The deterministic kernels G_j = S(j dt) profile are computed once and
/// shared by every path. The time integral of X uses trapezoid weights on the
/// same grid, summed in the reordered form sum_k q_k dmu_k sum_{m>k} w_m G_{m-k}.
inline FieldSolution multi_measure_solution(const ValidatedOperator& vop, const ProblemData& data, const GridSpec& grid,
                                            std::span<const double> times, int level, const QuadratureSpec& quad = {}) {
  const EllipticOperator& op = vop.op();
  if (grid.dim != op.dim()) throw DomainError("mild_solution: grid and operator dimensions differ");
  if (data.initial.empty() && data.forcing.empty()) throw DomainError("mild_solution: no data (pass zero terms explicitly)");
  data.check_aligned();
  if (times.empty()) throw DomainError("mild_solution: no report times");
  const std::size_t m = data.paths();
  if (m < 2) throw ParameterError("mild_solution: at least 2 paths");

  double horizon = 0.0;
  for (const auto& f : data.forcing) {
    if (horizon == 0.0) horizon = f.driver.horizon();
    if (f.driver.horizon() != horizon) throw GridError("mild_solution: drivers must share the horizon T");
    if (level > f.driver.level()) throw GridError("mild_solution: level exceeds a driver grid");
  }
  if (level < 0 || level > static_cast<int>(std::countr_zero(kMaxDriverGrid))) throw GridError("mild_solution: level out of range");
  if (horizon == 0.0) horizon = *std::max_element(times.begin(), times.end());
  const double dt = horizon > 0.0 ? horizon / std::ldexp(1.0, level) : 1.0;

  std::vector<std::size_t> steps;
  for (double t : times) {
    if (t > horizon * (1.0 + 1e-12)) throw DomainError("mild_solution: report time beyond the driver horizon");
    steps.push_back(detail::aligned_steps(t, dt));
  }
  const std::size_t nmax = *std::max_element(steps.begin(), steps.end());
  const std::size_t nodes = grid.size();

  std::vector<Driver> coarse;
  for (const auto& f : data.forcing) coarse.push_back(f.driver.coarsened(level));

  // Deterministic precomputation: S(j dt) g_i for j = 0..nmax and G_j = S(j dt) F_f for j = 1..nmax.
  std::vector<std::vector<GridFunction>> semi(data.initial.size());
  for (std::size_t i = 0; i < data.initial.size(); ++i)
    for (std::size_t j = 0; j <= nmax; ++j)
      semi[i].push_back(apply_semigroup(op, data.initial[i].profile, static_cast<double>(j) * dt, grid, quad));
  std::vector<std::vector<GridFunction>> kern(data.forcing.size());
  for (std::size_t f = 0; f < data.forcing.size(); ++f) {
    kern[f].push_back(GridFunction::sample(grid, data.forcing[f].profile));
    for (std::size_t j = 1; j <= nmax; ++j)
      kern[f].push_back(apply_semigroup(op, data.forcing[f].profile, static_cast<double>(j) * dt, grid, quad));
    for (const auto& g : kern[f])
      for (double v : g.values)
        if (!std::isfinite(v)) throw DomainError("mild_solution: forcing is not bounded on the grid");
  }
  for (const auto& s : semi)
    for (double v : s.front().values)
      if (!std::isfinite(v)) throw DomainError("mild_solution: initial field is not bounded on the grid");

  std::vector<double> values(times.size() * nodes * m), integrals(times.size() * nodes * m);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const std::size_t n = steps[ti];
    parallel_for(nodes, [&](std::size_t x) {
      double* xv = values.data() + (ti * nodes + x) * m;
      double* xi = integrals.data() + (ti * nodes + x) * m;
      for (std::size_t i = 0; i < data.initial.size(); ++i) {
        const double base = semi[i][n].values[x];
        double bar = 0.0;
        for (std::size_t j = 0; j <= n && n > 0; ++j) bar += detail::trapezoid_weight(j, n, dt) * semi[i][j].values[x];
        const auto amp = data.initial[i].amplitude.samples();
        for (std::size_t p = 0; p < m; ++p) {
          xv[p] += amp[p] * base;
          xi[p] += amp[p] * bar;
        }
      }
      std::vector<double> w(n), h(n);
      for (std::size_t f = 0; f < data.forcing.size() && n > 0; ++f) {
        const auto& g = kern[f];
        // prefix[J] = sum_{j=1..J} G_j(x)
        std::vector<double> prefix(n + 1, 0.0);
        for (std::size_t j = 1; j <= n; ++j) prefix[j] = prefix[j - 1] + g[j].values[x];
        for (std::size_t k = 0; k < n; ++k) {
          const double q = data.forcing[f].q(static_cast<double>(k) * dt);
          w[k] = q * g[n - k].values[x];
          h[k] = q * (dt * prefix[n - k] - 0.5 * dt * g[n - k].values[x]);
        }
        const Driver& d = coarse[f];
        for (std::size_t p = 0; p < m; ++p) {
          auto inc = d.increments(p);
          double sv = 0.0, si = 0.0;
          for (std::size_t k = 0; k < n; ++k) {
            sv += w[k] * inc[k];
            si += h[k] * inc[k];
          }
          xv[p] += sv;
          xi[p] += si;
        }
      }
    });
  }
  auto prov = std::make_shared<const FieldSolution::Provenance>(
      FieldSolution::Provenance{op, std::make_shared<const ProblemData>(data), level, dt});
  return FieldSolution(grid, std::vector<double>(times.begin(), times.end()), m, data.space_id(), std::move(values),
                       std::move(integrals), std::move(prov));
}

/// Single-measure mild solution.
inline FieldSolution mild_solution(const ValidatedOperator& vop, const ProblemData& data, const GridSpec& grid,
                                   std::span<const double> times, int level, const QuadratureSpec& quad = {}) {
  if (data.forcing.size() > 1) throw PreconditionError("mild_solution: one driving measure (see multi_measure_solution)");
  return multi_measure_solution(vop, data, grid, times, level, quad);
}

// ---- weak form ---------------------------------------------------------------------

struct WeakOptions {
  double tol = 0.02;
  double envelope_cutoff = 1e-10;  // truncate where the test-function envelope drops below this
  int exhaustion_steps = 3;
};

struct WeakResidual {
  KyFanValue residual;
  Ensemble lhs;                  // int X(x,t) phi(x) dx
  Ensemble rhs;                  // the three right-hand terms
  double truncation_radius;      // half-width of the last exhaustion box
  std::vector<ConvergenceReport> reports;
};

namespace detail {

inline Exhaustion weak_exhaustion(const FieldSolution& sol, const TestFunction& phi, const WeakOptions& opts) {
  const double radius = phi.support_radius(opts.envelope_cutoff);
  const GridSpec& g = sol.grid();
  if (!g.covers(phi.center(), radius)) throw CoverageError("weak_residual: grid does not cover the test-function support");
  const double h = std::min(g.spacing(0), g.dim == 2 ? g.spacing(1) : g.spacing(0));
  // Final mesh no coarser than the grid spacing, within the cell budget.
  const int fine = static_cast<int>(std::ceil(std::log2(2.0 * radius / h)));
  const int level = std::min(fine, g.dim == 2 ? kMaxTotalLevel / 2 : kMaxAxisLevel);
  std::vector<double> center{phi.center()[0]};
  if (g.dim == 2) center.push_back(phi.center()[1]);
  return Exhaustion::to_radius(std::move(center), radius, opts.exhaustion_steps, level);
}

inline std::function<double(std::span<const double>)> as_weight(int dim, std::function<double(const Point&)> f) {
  return [dim, f = std::move(f)](std::span<const double> x) { return f(Point{x[0], dim == 2 ? x[1] : 0.0}); };
}

}  // namespace detail

/// Ky Fan norm of  int X phi - [ int xi phi + int A*phi (int_0^t X ds) dx + int dmu int f phi dx ]  at time t.
inline WeakResidual weak_residual(const FieldSolution& sol, const TestFunction& phi, double t, const WeakOptions& opts = {}) {
  const auto& prov = sol.provenance();
  const EllipticOperator& op = prov.op;
  if (phi.dim() != op.dim()) throw DomainError("weak_residual: test function dimension differs");
  if (!phi.rapidly_decreasing()) throw PreconditionError("weak_residual: test function must decay");
  sol.time_index(t);
  const int dim = op.dim();
  const Exhaustion ex = detail::weak_exhaustion(sol, phi, opts);
  const double report_tol = std::max(opts.tol, 2.0 / std::sqrt(static_cast<double>(sol.paths())));
  const IntegrationOptions io{0, report_tol, {}, 0};

  std::vector<ConvergenceReport> reports;
  auto improper = [&](const RandomField& f, const char* what) {
    IntegralResult r = improper_integral(f, ex, io);
    if (!r.report.accepted) throw InconclusiveError(std::string("weak_residual: ") + what + " rejected");
    reports.push_back(r.report);
    return r.value;
  };

  const auto phi_w = detail::as_weight(dim, [&phi](const Point& x) { return phi.value(x); });
  const auto adj_w = detail::as_weight(dim, [&](const Point& x) { return adjoint_apply(op, phi, x); });

  const Ensemble lhs = improper(sol.field_at(t).weighted(phi_w), "int X phi");
  const RandomField xi0 = prov.data->initial_field(dim, sol.paths(), sol.space_id());
  const Ensemble init = prov.data->initial.empty() ? Ensemble(sol.space_id(), std::vector<double>(sol.paths(), 0.0))
                                                   : improper(xi0.weighted(phi_w), "int xi phi");
  const Ensemble drift = improper(sol.time_integral_field(t).weighted(adj_w), "int A*phi int X ds");

  std::vector<double> noise(sol.paths(), 0.0);
  const Box last = ex.box(ex.steps - 1);
  for (const auto& f : prov.data->forcing) {
    const double c_phi = classical_integral(
        [&](std::span<const double> x) {
          const Point p{x[0], dim == 2 ? x[1] : 0.0};
          return f.profile(p) * phi.value(p);
        },
        last, dim == 2 ? 7 : 10);
    const Ensemble term =
        integrate_det(f.driver, [&](double s) { return s < t - 1e-12 * std::max(1.0, t) ? c_phi * f.q(s) : 0.0; },
                      prov.level);
    for (std::size_t p = 0; p < noise.size(); ++p) noise[p] += term[p];
  }
  const Ensemble rhs = init + drift + Ensemble(sol.space_id(), std::move(noise));
  return {ky_fan_distance(lhs, rhs), lhs, rhs, ex.half_width(ex.steps - 1), std::move(reports)};
}

// ---- probes ------------------------------------------------------------------------

struct CrosscheckRow {
  double t;
  double rel_linf;
};

struct CrosscheckReport {
  std::vector<CrosscheckRow> rows;
  double worst = 0.0;
};

/// Mild solution with deterministic drivers against Crank-Nicolson for
/// u_t = A u + sum f_i rho_i, compared on paths 0 and M-1 over grid x times.
inline CrosscheckReport deterministic_crosscheck(const ValidatedOperator& vop, const ProblemData& data,
                                                 const GridSpec& grid, std::span<const double> times, int level,
                                                 const CrankNicolsonOptions& cn = {}) {
  for (const auto& f : data.forcing)
    if (f.driver.kind() != DriverKind::deterministic)
      throw PreconditionError("deterministic_crosscheck: every driver must be deterministic");
  const EllipticOperator& op = vop.op();
  const FieldSolution sol = multi_measure_solution(vop, data, grid, times, level);
  const double tmax = *std::max_element(times.begin(), times.end());

  // Pad so the zero-Neumann walls sit beyond the truncation radius.
  const double h = grid.spacing(0);
  const double pad = std::ceil(truncation_radius(op, std::max(tmax, 1e-3)) / h) * h;
  GridSpec wide = grid;
  for (int a = 0; a < grid.dim; ++a) {
    wide.axes[a] = {grid.axes[a].lo - pad, grid.axes[a].hi + pad};
    wide.counts[a] = grid.counts[a] + 2 * static_cast<std::size_t>(std::llround(pad / grid.spacing(a)));
  }
  const std::size_t off = static_cast<std::size_t>(std::llround(pad / h));
  auto wide_index = [&](std::size_t node) {
    if (grid.dim == 1) return node + off;
    const std::size_t i = node / grid.counts[1], j = node % grid.counts[1];
    return (i + off) * wide.counts[1] + (j + off);
  };

  auto rho = [&](const ForcingTerm& f, double s) {
    const auto& spec = f.driver.spec();
    return spec.density ? spec.density(s) : spec.rate;
  };
  const SourceFunction source = [&](const Point& x, double s) {
    double v = 0.0;
    for (const auto& f : data.forcing) v += f.profile(x) * f.q(s) * rho(f, s);
    return v;
  };

  CrosscheckReport rep;
  std::vector<double> abs_err(times.size(), 0.0), peak(times.size(), 0.0);
  for (std::size_t path : {std::size_t{0}, sol.paths() - 1}) {
    const GridFunction init = GridFunction::sample(wide, [&](const Point& x) {
      double v = 0.0;
      for (const auto& t : data.initial) v += t.amplitude[path] * t.profile(x);
      return v;
    });
    const auto fd = crank_nicolson(op, init, data.forcing.empty() ? SourceFunction{} : source, times, cn);
    for (std::size_t ti = 0; ti < times.size(); ++ti)
      for (std::size_t node = 0; node < grid.size(); ++node) {
        const double ref = fd[ti].values[wide_index(node)];
        peak[ti] = std::max(peak[ti], std::abs(ref));
        abs_err[ti] = std::max(abs_err[ti], std::abs(sol.samples(ti, node)[path] - ref));
      }
  }
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const double rel = peak[ti] > 0.0 ? abs_err[ti] / peak[ti] : abs_err[ti];
    rep.rows.push_back({times[ti], rel});
    rep.worst = std::max(rep.worst, rel);
  }
  return rep;
}

/// ky_fan( int (X_A - X_B)(x, t) phi(x) dx ) for two solutions of the same problem.
inline KyFanValue uniqueness_probe(const FieldSolution& a, const FieldSolution& b, const TestFunction& phi, double t,
                                   const WeakOptions& opts = {}) {
  if (!a.provenance().op.self_adjoint() || !b.provenance().op.self_adjoint())
    throw PreconditionError("uniqueness_probe: the operator must be self-adjoint (b = 0)");
  if (a.space_id() != b.space_id() || a.paths() != b.paths()) throw AlignmentError("uniqueness_probe: different probability spaces");
  if (!(a.grid() == b.grid())) throw AlignmentError("uniqueness_probe: different spatial grids");
  const Exhaustion ex = detail::weak_exhaustion(a, phi, opts);
  const RandomField fa = a.field_at(t), fb = b.field_at(t);
  const RandomField diff(a.paths(), a.space_id(), fa.dim(),
                         [fa, fb](std::span<const double> x, std::span<double> out) {
                           std::vector<double> tmp(out.size());
                           fa.evaluate_into(x, out);
                           fb.evaluate_into(x, tmp);
                           for (std::size_t k = 0; k < out.size(); ++k) out[k] -= tmp[k];
                         });
  const auto w = detail::as_weight(phi.dim(), [&phi](const Point& x) { return phi.value(x); });
  const double report_tol = std::max(opts.tol, 2.0 / std::sqrt(static_cast<double>(a.paths())));
  IntegralResult r = improper_integral(diff.weighted(w), ex, {0, report_tol, {}, 0});
  if (!r.report.accepted) throw InconclusiveError("uniqueness_probe: projection integral rejected");
  return ky_fan(r.value);
}

}  // namespace stochint
