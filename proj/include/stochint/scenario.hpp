#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "stochint/catalog.hpp"
#include "stochint/config.hpp"
#include "stochint/drivers.hpp"
#include "stochint/fd_oracle.hpp"
#include "stochint/interchange.hpp"
#include "stochint/io.hpp"
#include "stochint/parabolic.hpp"
#include "stochint/prob_core.hpp"
#include "stochint/riemann.hpp"
#include "stochint/spde.hpp"

namespace stochint {

struct RunReport {
  std::vector<ReportRow> rows;  // canonical order
  Verdict overall = Verdict::pass;
  std::vector<std::pair<std::string, std::string>> artifacts;  // extra files: name, content

  int exit_code() const {
    switch (overall) {
      case Verdict::pass: return 0;
      case Verdict::fail: return 1;
      case Verdict::inconclusive: return 3;
    }
    return 1;
  }
};

namespace detail {

class RowSink {
 public:
  RowSink(std::string scenario, std::string anchor, std::string check, std::vector<ReportRow>& rows)
      : scenario_(std::move(scenario)), anchor_(std::move(anchor)), check_(std::move(check)), rows_(rows) {}

  void add(int level, std::string metric, double value, double tol, bool pass) {
    rows_.push_back({scenario_, check_, anchor_, level, std::move(metric), value, tol,
                     pass ? Verdict::pass : Verdict::fail, 0.0});
  }
  // value <= tol passes
  void at_most(int level, std::string metric, double value, double tol) {
    add(level, std::move(metric), value, tol, value <= tol);
  }
  // value >= tol passes
  void at_least(int level, std::string metric, double value, double tol) {
    add(level, std::move(metric), value, tol, value >= tol);
  }
  void inconclusive(int level, const std::string& why, double tol) {
    rows_.push_back({scenario_, check_, anchor_, level, "rejected: " + why, std::nan(""), tol, Verdict::inconclusive, 0.0});
  }

 private:
  std::string scenario_, anchor_, check_;
  std::vector<ReportRow>& rows_;
};

class Checks {
 public:
  explicit Checks(const ScenarioConfig& cfg) : cfg_(cfg) {}

  /// Runs body(RowSink&) and stamps the elapsed time on its rows.
  /// A rejected convergence report becomes an inconclusive row.
  template <class Body>
  void run(const std::string& check_id, Body&& body, const std::string& anchor = {}) {
    const std::size_t first = rows_.size();
    RowSink sink(cfg_.scenario, anchor.empty() ? cfg_.info().anchor : anchor, check_id, rows_);
    const auto start = std::chrono::steady_clock::now();
    try {
      body(sink);
    } catch (const InconclusiveError& e) {
      sink.inconclusive(cfg_.level, e.what(), cfg_.tolerance);
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    for (std::size_t i = first; i < rows_.size(); ++i) rows_[i].runtime_ms = ms;
  }

  std::vector<ReportRow> take() { return std::move(rows_); }

 private:
  const ScenarioConfig& cfg_;
  std::vector<ReportRow> rows_;
};

inline std::string label(const std::string& stem, double v) { return stem + "=" + format_number(v); }

inline std::vector<double> doubles(const json& arr) {
  std::vector<double> out;
  for (const auto& v : arr) out.push_back(v.get<double>());
  return out;
}

inline double sampling_band_of(const ScenarioConfig& cfg) { return 2.0 / std::sqrt(static_cast<double>(cfg.paths)); }

// Largest increase between consecutive trace levels (<= 0 when non-increasing).
inline double max_increase(const std::vector<double>& r) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < r.size(); ++i) worst = std::max(worst, r[i] - r[i - 1]);
  return r.size() < 2 ? 0.0 : worst;
}

inline void identity_rows(RowSink& sink, const IdentityResidual& r, const ScenarioConfig& cfg) {
  for (const auto& tr : r.trace) sink.at_most(tr.level, "ky_fan(lhs - rhs)", tr.residual, cfg.tolerance);
}

inline void trace_rows(RowSink& sink, const IdentityResidual& r, const ScenarioConfig& cfg) {
  std::vector<double> values;
  for (const auto& tr : r.trace) values.push_back(tr.residual);
  sink.at_most(cfg.level, "max increase of the residual over levels", max_increase(values), sampling_band_of(cfg));
}

inline Driver driver_for(const ProbSpace& space, const json& d, std::uint64_t stream = 0) {
  return make_driver(space, driver_spec_from(d, stream));
}

// Kernel gate row; returns the validated operator when the gate passed.
inline std::optional<ValidatedOperator> gate_rows(Checks& checks, const EllipticOperator& op, const json& times) {
  std::optional<ValidatedOperator> out;
  checks.run(
      "kernel_gate",
      [&](RowSink& sink) {
        const auto ts = doubles(times);
        const KernelGate gate = validate_kernel(op, ts);
        for (std::size_t i = 0; i < gate.rows.size(); ++i)
          sink.at_most(static_cast<int>(i), label("rel L-inf kernel vs Crank-Nicolson t", gate.rows[i].t),
                       gate.rows[i].rel_linf, gate.tolerance);
        out = gate.validated;
      },
      "closed-form fundamental solution validated against a finite-difference oracle");
  return out;
}

inline std::size_t center_node(const GridSpec& g) {
  std::size_t best = 0;
  double dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.node(k);
    const double r = std::hypot(x[0], x[1]);
    if (r < dist) {
      dist = r;
      best = k;
    }
  }
  return best;
}

// |Var - expected| in units of the standard error of a Gaussian sample variance.
inline double variance_z(const Ensemble& e, double expected) {
  const double se = expected * std::sqrt(2.0 / static_cast<double>(e.size() - 1));
  return std::abs(e.variance() - expected) / se;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---- scenarios ------------------------------------------------------------------------

inline void run_quasi_norm(const ScenarioConfig& cfg, Checks& checks) {
  const ProbSpace space(cfg.paths, cfg.seed);
  for (double c : doubles(cfg.params.at("constants")))
    checks.run(label("constant_c", c), [&](RowSink& sink) {
      sink.at_most(0, "|ky_fan(c) - min(c, 1)|", std::abs(ky_fan(space.constant(c)).value - std::min(c, 1.0)),
                   cfg.tolerance);
    });
  std::uint64_t tag = stream_tag::user + 2;
  for (double p : doubles(cfg.params.at("bernoulli_p"))) {
    checks.run(label("bernoulli_p", p), [&](RowSink& sink) {
      const Ensemble ind = space.generate(tag, [p](Stream& s) { return s.uniform() < p ? 1.0 : 0.0; });
      sink.at_most(0, "|ky_fan(1_{U < p}) - p|", std::abs(ky_fan(ind).value - p), sampling_band_of(cfg));
    });
    ++tag;
  }
  checks.run("triangle_inequality", [&](RowSink& sink) {
    const Ensemble x = space.generate(stream_tag::user + 10, [](Stream& s) { return 0.3 * s.normal(); });
    const Ensemble y = space.generate(stream_tag::user + 11, [](Stream& s) { return 0.05 * s.cauchy(); });
    sink.at_most(0, "ky_fan(X + Y) - ky_fan(X) - ky_fan(Y)", ky_fan(x + y).value - ky_fan(x).value - ky_fan(y).value,
                 0.0);
  });
}

inline void run_subset_inequality(const ScenarioConfig& cfg, Checks& checks) {
  const ProbSpace space(cfg.paths, cfg.seed);
  const auto families = cfg.params.at("families").get<std::size_t>();
  const auto max_terms = cfg.params.at("max_terms").get<std::size_t>();
  checks.run("random_families", [&](RowSink& sink) {
    double worst = 0.0;
    std::size_t violations = 0;
    for (std::size_t f = 0; f < families; ++f) {
      Stream meta(cfg.seed, f, stream_tag::user + 20);
      const std::size_t l = 1 + static_cast<std::size_t>(meta.uniform() * static_cast<double>(max_terms));
      std::vector<Ensemble> xs;
      std::vector<double> coeffs;
      for (std::size_t k = 0; k < l; ++k) {
        const double scale = std::exp(std::log(0.01) * meta.uniform());  // in (0.01, 1)
        const double p = 0.01 + 0.49 * meta.uniform();
        const std::uint64_t tag = stream_tag::user + 0x10000 + f * 32 + k;
        switch ((f + k) % 3) {
          case 0: xs.push_back(space.generate(tag, [scale](Stream& s) { return scale * s.normal(); })); break;
          case 1: xs.push_back(space.generate(tag, [scale](Stream& s) { return 0.1 * scale * s.cauchy(); })); break;
          default:
            xs.push_back(space.generate(tag, [scale, p](Stream& s) { return s.uniform() < p ? 2.0 * scale : 0.0; }));
        }
        coeffs.push_back(2.0 * meta.uniform() - 1.0);
      }
      const SubsetInequality r = check_subset_inequality(xs, coeffs);
      worst = std::max(worst, r.ratio);
      violations += r.holds ? 0 : 1;
    }
    sink.at_most(0, "max over families of lhs / rhs", worst, cfg.tolerance);
    sink.at_most(1, "violations", static_cast<double>(violations), 0.0);
  });
}

inline void run_riemann(const ScenarioConfig& cfg, Checks& checks) {
  const ProbSpace space(cfg.paths, cfg.seed);
  const int level = cfg.level;
  const IntegrationOptions io{level, cfg.tolerance, {}, cfg.seed};
  const Ensemble eta = space.generate(stream_tag::user + 1, [](Stream& s) { return s.normal(); });

  checks.run("constant_eta", [&](RowSink& sink) {
    const Box b{{0.0, 1.0}, {0.0, 2.0}};
    const int l2 = std::min(level, kMaxTotalLevel / 2 - 2);
    const IntegralResult r = riemann_integral(RandomField::separable(eta, 2), b, {l2, cfg.tolerance, {}, cfg.seed});
    sink.at_most(l2, "ky_fan(int_B eta - |B| eta)", ky_fan_distance(r.value, 2.0 * eta).value, 1e-12);
  });
  checks.run("deterministic_x2", [&](RowSink& sink) {
    const RandomField f = RandomField::deterministic(space, 1, [](std::span<const double> x) { return x[0] * x[0]; });
    const IntegralResult r = riemann_integral(f, Box{{0.0, 1.0}}, io);
    const double mesh = std::ldexp(1.0, -level);
    sink.at_most(level, "|int_0^1 x^2 - 1/3|", std::abs(r.value[0] - 1.0 / 3.0), mesh * mesh);
  });
  checks.run("stochastic_integrand", [&](RowSink& sink) {
    const Driver d = driver_for(space, cfg.params.at("driver"));
    const Driver coarse = d.coarsened(std::min(d.level(), level));
    const SpaceTimeFunction& h = catalog::lookup(catalog::integrands(), "exp_decay_xs", "integrand").h;
    const RandomField xi = det_integral_field(coarse, h, 1, Box{{0.0, 1.0}});
    const IntegralResult r = riemann_integral(xi, Box{{0.0, 1.0}}, io);
    for (const auto& c : r.report.cauchy) sink.at_most(c.level, "ky_fan Cauchy distance to one level coarser", c.distance, cfg.tolerance);
    sink.at_most(level, "ky_fan(center tags - random tags)", r.report.cross_random, cfg.tolerance);
  });
  checks.run("improper_gauss", [&](RowSink& sink) {
    const double radius = cfg.params.at("improper_radius").get<double>();
    const int final_level = std::min(level + 2, kMaxAxisLevel);
    const Exhaustion e = Exhaustion::to_radius({0.0}, radius, 3, final_level);
    const RandomField f = RandomField::separable(eta, 1, [](std::span<const double> x) { return std::exp(-x[0] * x[0]); });
    const IntegralResult r = improper_integral(f, e, {level, cfg.tolerance, {}, cfg.seed});
    if (!r.report.accepted) throw InconclusiveError("improper integral rejected");
    sink.at_most(final_level, "ky_fan(int_R exp(-x^2) eta - sqrt(pi) eta)",
                 ky_fan_distance(r.value, std::sqrt(std::numbers::pi) * eta).value, cfg.tolerance);
  });
}

inline void run_pathological(const ScenarioConfig& cfg, Checks& checks) {
  const ProbSpace space(cfg.paths, cfg.seed);
  const PathologicalParams params{cfg.params.at("base").get<double>(), cfg.params.at("k_max").get<int>()};
  checks.run("quasi_norm_floor", [&](RowSink& sink) {
    for (const auto& row : pathological_demo(space, cfg.params.at("n_max").get<int>(), params))
      sink.at_least(row.n, "ky_fan((1/n) int_{A_n} xi) (level = n)", row.norm.value, cfg.tolerance);
  });
  checks.run("stochastic_continuity", [&](RowSink& sink) {
    const RandomField xi = build_pathological_field(space, params);
    const double gap = cfg.params.at("gap").get<double>();
    int i = 0;
    for (double x : doubles(cfg.params.at("probes")))
      sink.at_most(i++, label("ky_fan(xi(x) - xi(x + gap)) x", x), ky_fan_distance(xi(x), xi(x + gap)).value,
                   cfg.tolerance);
  });
}

inline void run_fubini(const ScenarioConfig& cfg, Checks& checks) {
  const ProbSpace space(cfg.paths, cfg.seed);
  const auto& p = cfg.params;
  const Driver d = driver_for(space, p.at("driver"));
  const auto& integrand = catalog::lookup(catalog::integrands(), p.at("integrand").get<std::string>(), "integrand");
  const auto dim = p.at("dim").get<std::size_t>();
  const IdentityOptions opts{cfg.level, 3, cfg.tolerance, cfg.seed};
  std::optional<IdentityResidual> r;
  checks.run("residual", [&](RowSink& sink) {
    if (p.at("improper").get<bool>()) {
      const Exhaustion e = Exhaustion::to_radius(std::vector<double>(dim, 0.0), p.at("radius").get<double>(), 3,
                                                 std::min(cfg.level + 2, dim == 2 ? kMaxTotalLevel / 2 : kMaxAxisLevel));
      r = fubini_improper_residual(d, integrand.h, e, opts);
    } else {
      r = fubini_residual(d, integrand.h, Box::cube(dim, p.at("box")[0].get<double>(), p.at("box")[1].get<double>()), opts);
    }
    identity_rows(sink, *r, cfg);
  });
  if (r) checks.run("trace_nonincreasing", [&](RowSink& sink) { trace_rows(sink, *r, cfg); });
}

inline void run_product(const ScenarioConfig& cfg, Checks& checks) {
  const ProbSpace space(cfg.paths, cfg.seed);
  const auto& p = cfg.params;
  const Driver d = driver_for(space, p.at("driver"));
  const RandomField f = catalog::lookup(catalog::product_fields(), p.at("field").get<std::string>(), "field")(space, d);
  const Box bx{{p.at("box_x")[0].get<double>(), p.at("box_x")[1].get<double>()}};
  const Box bs{{p.at("box_s")[0].get<double>(), p.at("box_s")[1].get<double>()}};
  std::optional<ProductResiduals> r;
  checks.run("iterated_x_outer", [&](RowSink& sink) {
    r = iterated_product_residual(f, bx, bs, {cfg.level, 3, cfg.tolerance, cfg.seed});
    identity_rows(sink, r->x_outer, cfg);
  });
  if (r) checks.run("iterated_s_outer", [&](RowSink& sink) { identity_rows(sink, r->s_outer, cfg); });
}

inline void run_triangle(const ScenarioConfig& cfg, Checks& checks) {
  const ProbSpace space(cfg.paths, cfg.seed);
  const auto& p = cfg.params;
  const Driver d = driver_for(space, p.at("driver"));
  const double s = p.at("s").get<double>();
  const IdentityOptions opts{cfg.level, 3, cfg.tolerance, cfg.seed};
  checks.run("residual", [&](RowSink& sink) {
    const RandomField f = catalog::lookup(catalog::line_fields(), p.at("field").get<std::string>(), "field")(space, d);
    identity_rows(sink, triangle_identity_residual(f, s, opts), cfg);
  });
  checks.run("analytic_linear", [&](RowSink& sink) {
    const RandomField v = RandomField::deterministic(space, 1, [](std::span<const double> x) { return x[0]; });
    const IdentityResidual r = triangle_identity_residual(v, s, opts);
    const double exact = s * s * s / 6.0;
    sink.at_most(cfg.level, "|lhs - s^3/6| for xi(v) = v", std::abs(r.lhs[0] - exact), 1e-4);
    sink.at_most(cfg.level, "|rhs - s^3/6| for xi(v) = v", std::abs(r.rhs[0] - exact), 1e-4);
  });
}

inline void run_parts(const ScenarioConfig& cfg, Checks& checks) {
  const ProbSpace space(cfg.paths, cfg.seed);
  const auto& p = cfg.params;
  const Driver d = driver_for(space, p.at("driver"));
  const double s = p.at("s").get<double>();
  const IdentityOptions opts{cfg.level, 3, cfg.tolerance, cfg.seed};
  const auto& weights = catalog::weights();
  checks.run("residual", [&](RowSink& sink) {
    const RandomField f = catalog::lookup(catalog::line_fields(), p.at("field").get<std::string>(), "field")(space, d);
    const auto& w = catalog::lookup(weights, p.at("weight").get<std::string>(), "weight");
    identity_rows(sink, parts_identity_residual(f, w.g, w.dg, s, opts), cfg);
  });
  checks.run("analytic_g_one", [&](RowSink& sink) {
    const RandomField f = catalog::lookup(catalog::line_fields(), p.at("field").get<std::string>(), "field")(space, d);
    const auto& w = catalog::lookup(weights, "one", "weight");
    const IdentityResidual r = parts_identity_residual(f, w.g, w.dg, s, opts);
    sink.at_most(cfg.level, "ky_fan(lhs - rhs) for g = 1", r.residual.value, 1e-6);
  });
  checks.run("analytic_g_u_xi_one", [&](RowSink& sink) {
    const RandomField one = RandomField::deterministic(space, 1, [](std::span<const double>) { return 1.0; });
    const auto& w = catalog::lookup(weights, "linear", "weight");
    const IdentityResidual r = parts_identity_residual(one, w.g, w.dg, s, opts);
    sink.at_most(cfg.level, "ky_fan(lhs - rhs) for g(u) = u, xi = 1", r.residual.value, 1e-6);
  });
}

inline void run_semigroup(const ScenarioConfig& cfg, Checks& checks) {
  const auto& p = cfg.params;
  const EllipticOperator op = operator_from(p.at("operator"));
  const GridSpec grid = grid_from(p.at("grid"), op.dim());
  const double t = p.at("t").get<double>();
  const TestFunction g =
      catalog::lookup(catalog::test_functions(), p.at("test_function").get<std::string>(), "test function")(op.dim());
  checks.run("identity_test_function", [&](RowSink& sink) {
    sink.at_most(0, "sup |S(t)g - g - A int_0^t S(s)g ds|", semigroup_identity_residual(op, g, t, grid), cfg.tolerance);
  });
  checks.run("identity_constant", [&](RowSink& sink) {
    const TestFunction c = TestFunction::constant(op.dim(), p.at("constant").get<double>());
    sink.at_most(0, "sup |S(t)c - c - A int_0^t S(s)c ds|", semigroup_identity_residual(op, c, t, grid), 1e-8);
  });
  checks.run("mass", [&](RowSink& sink) {
    int i = 0;
    for (double s : doubles(p.at("mass_times")))
      sink.at_most(i++, label("|int p(0, y, t) dy - exp(c t)| t", s), std::abs(kernel_mass(op, {0.0, 0.0}, s) - std::exp(op.c() * s)), 1e-8);
  });
  checks.run("composition", [&](RowSink& sink) {
    // S(t) g against S(t/2) applied to grid data S(t/2) g on a padded grid.
    const double half = 0.5 * t;
    const double h = grid.spacing(0);
    const double pad = std::ceil(truncation_radius(op, half) / h) * h;
    GridSpec wide = grid;
    for (int a = 0; a < grid.dim; ++a) {
      wide.axes[a] = {grid.axes[a].lo - pad, grid.axes[a].hi + pad};
      wide.counts[a] = grid.counts[a] + 2 * static_cast<std::size_t>(std::llround(pad / grid.spacing(a)));
    }
    const GridFunction inner = apply_semigroup(op, g, half, wide);
    const GridFunction twice = apply_semigroup(op, inner, half, grid);
    const GridFunction once = apply_semigroup(op, g, t, grid);
    sink.at_most(0, "sup |S(t)g - S(t/2) S(t/2) g|", max_abs_diff(once.values, twice.values), cfg.tolerance);
  });
}

inline void run_kernel_gate(const ScenarioConfig& cfg, Checks& checks) {
  const auto& p = cfg.params;
  const EllipticOperator op = operator_from(p.at("operator"));
  checks.run("fd_oracle", [&](RowSink& sink) {
    const auto ts = doubles(p.at("times"));
    const KernelGate gate = validate_kernel(op, ts, p.at("spacing").get<double>(), cfg.tolerance);
    for (std::size_t i = 0; i < gate.rows.size(); ++i)
      sink.at_most(static_cast<int>(i), label("rel L-inf kernel vs Crank-Nicolson t", gate.rows[i].t),
                   gate.rows[i].rel_linf, cfg.tolerance);
  });
  checks.run("mass", [&](RowSink& sink) {
    int i = 0;
    for (double s : doubles(p.at("mass_times")))
      sink.at_most(i++, label("|int p(0, y, t) dy - exp(c t)| t", s), std::abs(kernel_mass(op, {0.0, 0.0}, s) - std::exp(op.c() * s)), 1e-8);
  });
  checks.run("bound", [&](RowSink& sink) {
    std::vector<Point> offsets;
    if (op.dim() == 1) {
      for (int i = -32; i <= 32; ++i) offsets.push_back({0.125 * i, 0.0});
    } else {
      for (int i = -12; i <= 12; ++i)
        for (int j = -12; j <= 12; ++j) offsets.push_back({0.25 * i, 0.25 * j});
      // The extremal direction for C2 is the top eigenvector of a.
      const auto& a = op.a();
      Point v = std::abs(a.a12) > 0.0 ? Point{a.a12, op.lambda_max() - a.a11} : (a.a11 >= a.a22 ? Point{1.0, 0.0} : Point{0.0, 1.0});
      const double n = std::hypot(v[0], v[1]);
      for (int k = -12; k <= 12; ++k) offsets.push_back({0.25 * k * v[0] / n, 0.25 * k * v[1] / n});
    }
    const auto range = doubles(p.at("bound_t_range"));
    const KernelBound kb = kernel_bound_check(op, offsets, {range[0], range[1]});
    sink.at_least(0, "bound holds on held-out points (1 = yes)", kb.holds ? 1.0 : 0.0, 1.0);
    if (op.self_adjoint() && op.c() == 0.0) {
      const double c1 = std::pow(4.0 * std::numbers::pi, -0.5 * op.dim()) / std::sqrt(op.det_a());
      const double c2 = 1.0 / (4.0 * op.lambda_max());
      sink.at_most(1, "|C1 / C1_closed - 1|", std::abs(kb.c1 / c1 - 1.0), 0.01);
      sink.at_most(2, "|C2 / C2_closed - 1|", std::abs(kb.c2 / c2 - 1.0), 0.01);
    }
  });
}

struct SpdeSetup {
  EllipticOperator op;
  GridSpec grid;
  TestFunction phi;
  std::vector<double> times;
  double t;
};

inline SpdeSetup spde_setup(const json& p) {
  const EllipticOperator op = operator_from(p.at("operator"));
  SpdeSetup s{op, grid_from(p.at("grid"), op.dim()),
              catalog::lookup(catalog::test_functions(), p.at("test_function").get<std::string>(), "test function")(op.dim()),
              p.contains("times") ? doubles(p.at("times")) : std::vector<double>{p.at("t").get<double>()},
              p.at("t").get<double>()};
  return s;
}

inline ProblemData problem_from(const ProbSpace& space, const json& p, const Driver& d) {
  ProblemData data;
  data.initial = catalog::lookup(catalog::initial_fields(), p.at("initial").get<std::string>(), "initial field")(space);
  data.forcing.push_back({catalog::lookup(catalog::forcings(), p.at("forcing").get<std::string>(), "forcing"), nullptr, d});
  return data;
}

inline void run_spde_baseline(const ScenarioConfig& cfg, Checks& checks, RunReport& report) {
  const auto& p = cfg.params;
  const SpdeSetup su = spde_setup(p);
  const auto vop = gate_rows(checks, su.op, p.at("gate_times"));
  if (!vop) return;
  const ProbSpace space(cfg.paths, cfg.seed);
  const Driver d = driver_for(space, p.at("driver"));
  const ProblemData data = problem_from(space, p, d);

  std::vector<FieldSolution> sols;
  std::vector<double> residuals;
  checks.run("weak_residual", [&](RowSink& sink) {
    for (int l = cfg.level - 2; l <= cfg.level; ++l) {
      sols.push_back(mild_solution(*vop, data, su.grid, su.times, l));
      const WeakResidual w = weak_residual(sols.back(), su.phi, su.t, {cfg.tolerance});
      residuals.push_back(w.residual.value);
      sink.at_most(l, "ky_fan weak residual (truncated at |x - c| <= " + format_number(w.truncation_radius) + ")",
                   w.residual.value, cfg.tolerance);
    }
  });
  if (residuals.size() == 3)
    checks.run("weak_residual_decreasing", [&](RowSink& sink) {
      sink.at_most(cfg.level, "max increase of the weak residual over levels", max_increase(residuals), 0.0);
    });

  if (d.kind() == DriverKind::wiener && su.op.c() == 0.0)
    checks.run("variance_f_one", [&](RowSink& sink) {
      ProblemData one;
      one.forcing.push_back({[](const Point&) { return 1.0; }, nullptr, d});
      const FieldSolution s1 = mild_solution(*vop, one, su.grid, su.times, cfg.level);
      const Ensemble x = s1.at(s1.time_index(su.t), center_node(su.grid));
      sink.at_most(cfg.level, "|Var X(0, t) - t| / standard error", variance_z(x, su.t), 3.0);
    });

  if (p.at("export").get<bool>() && sols.size() == 3) {
    report.artifacts.emplace_back("solution.csv", solution_csv(sols[2], &sols[1]));
    report.artifacts.emplace_back("solution.bin", encode_dump(sols[2]));
  }
}

inline void run_deterministic_crosscheck(const ScenarioConfig& cfg, Checks& checks) {
  const auto& p = cfg.params;
  const EllipticOperator op = operator_from(p.at("operator"));
  const auto vop = gate_rows(checks, op, p.at("gate_times"));
  if (!vop) return;
  const ProbSpace space(cfg.paths, cfg.seed);
  const Driver d = make_driver(space, DriverSpec::deterministic(p.at("horizon").get<double>(), std::size_t{1} << cfg.level,
                                                                p.at("density").get<double>()));
  ProblemData data;
  data.initial = catalog::lookup(catalog::initial_fields(), p.at("initial").get<std::string>(), "initial field")(space);
  data.forcing.push_back({catalog::lookup(catalog::forcings(), p.at("forcing").get<std::string>(), "forcing"), nullptr, d});
  const GridSpec grid = grid_from(p.at("grid"), op.dim());
  const auto times = doubles(p.at("times"));
  checks.run("fd_crosscheck", [&](RowSink& sink) {
    const CrosscheckReport rep = deterministic_crosscheck(*vop, data, grid, times, cfg.level);
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
      sink.at_most(static_cast<int>(i), label("rel L-inf mild vs Crank-Nicolson t", rep.rows[i].t), rep.rows[i].rel_linf,
                   cfg.tolerance);
  });
}

inline void run_multi_measure(const ScenarioConfig& cfg, Checks& checks) {
  const auto& p = cfg.params;
  const SpdeSetup su = spde_setup(p);
  const auto vop = gate_rows(checks, su.op, p.at("gate_times"));
  if (!vop) return;
  const ProbSpace space(cfg.paths, cfg.seed);
  std::vector<Driver> drivers;
  for (std::size_t i = 0; i < p.at("drivers").size(); ++i) drivers.push_back(driver_for(space, p.at("drivers")[i], i));
  ProblemData data;
  data.initial = catalog::lookup(catalog::initial_fields(), p.at("initial").get<std::string>(), "initial field")(space);
  for (std::size_t i = 0; i < drivers.size(); ++i)
    data.forcing.push_back(
        {catalog::lookup(catalog::forcings(), p.at("forcings")[i].get<std::string>(), "forcing"), nullptr, drivers[i]});
  const std::vector<double> times{su.t};

  std::optional<FieldSolution> full;
  checks.run("weak_residual", [&](RowSink& sink) {
    full = multi_measure_solution(*vop, data, su.grid, times, cfg.level);
    const WeakResidual w = weak_residual(*full, su.phi, su.t, {cfg.tolerance});
    sink.at_most(cfg.level, "ky_fan weak residual with " + std::to_string(drivers.size()) + " measures",
                 w.residual.value, cfg.tolerance);
  });
  if (!full) full = multi_measure_solution(*vop, data, su.grid, times, cfg.level);

  checks.run("additivity", [&](RowSink& sink) {
    // X(xi, f_1..f_j) against X(xi, f_1) + X(0, f_2..f_j), path by path.
    ProblemData first{data.initial, {data.forcing.front()}};
    ProblemData rest;
    rest.initial = catalog::lookup(catalog::initial_fields(), "zero", "initial field")(space);
    rest.forcing.assign(data.forcing.begin() + 1, data.forcing.end());
    const FieldSolution a = multi_measure_solution(*vop, first, su.grid, times, cfg.level);
    const FieldSolution b = multi_measure_solution(*vop, rest, su.grid, times, cfg.level);
    std::vector<double> sum(a.raw_values().begin(), a.raw_values().end());
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += b.raw_values()[i];
    sink.at_most(cfg.level, "max |X(all) - X(xi, f_1) - X(0, rest)|", max_abs_diff(full->raw_values(), sum), 1e-10);
  });
  checks.run("zero_forcing_reduction", [&](RowSink& sink) {
    ProblemData single{data.initial, {data.forcing.front()}};
    ProblemData padded = single;
    for (std::size_t i = 1; i < drivers.size(); ++i)
      padded.forcing.push_back({catalog::lookup(catalog::forcings(), "zero", "forcing"), nullptr, drivers[i]});
    const FieldSolution a = mild_solution(*vop, single, su.grid, times, cfg.level);
    const FieldSolution b = multi_measure_solution(*vop, padded, su.grid, times, cfg.level);
    sink.at_most(cfg.level, "max |X(f_1, 0, ...) - X(f_1)|", max_abs_diff(a.raw_values(), b.raw_values()), 1e-12);
  });
  if (su.op.c() == 0.0)
    checks.run("variance_doubling", [&](RowSink& sink) {
      const double horizon = p.at("drivers")[0].at("horizon").get<double>();
      const std::size_t n = std::size_t{1} << cfg.level;
      const Driver w1 = make_driver(space, DriverSpec::wiener(horizon, n, 101));
      const Driver w2 = make_driver(space, DriverSpec::wiener(horizon, n, 102));
      const SpatialFunction one = [](const Point&) { return 1.0; };
      const FieldSolution s1 = multi_measure_solution(*vop, ProblemData{{}, {{one, nullptr, w1}}}, su.grid, times, cfg.level);
      const FieldSolution s2 =
          multi_measure_solution(*vop, ProblemData{{}, {{one, nullptr, w1}, {one, nullptr, w2}}}, su.grid, times, cfg.level);
      const std::size_t node = center_node(su.grid);
      sink.at_most(cfg.level, "|Var X(0, t) - t| / standard error, one driver", variance_z(s1.at(0, node), su.t), 3.0);
      sink.at_most(cfg.level, "|Var X(0, t) - 2t| / standard error, two drivers", variance_z(s2.at(0, node), 2.0 * su.t), 3.0);
    });
}

inline void run_uniqueness(const ScenarioConfig& cfg, Checks& checks) {
  const auto& p = cfg.params;
  const SpdeSetup su = spde_setup(p);
  const auto vop = gate_rows(checks, su.op, p.at("gate_times"));
  if (!vop) return;
  const ProbSpace space(cfg.paths, cfg.seed);
  const Driver d = driver_for(space, p.at("driver"));
  const ProblemData data = problem_from(space, p, d);
  const std::vector<double> times{su.t};
  const WeakOptions wo{cfg.tolerance};
  const FieldSolution a = mild_solution(*vop, data, su.grid, times, cfg.level);

  checks.run("self", [&](RowSink& sink) {
    sink.at_most(cfg.level, "ky_fan probe(X, X)", uniqueness_probe(a, a, su.phi, su.t, wo).value, 1e-12);
  });
  checks.run("level_refinement", [&](RowSink& sink) {
    const FieldSolution b = mild_solution(*vop, data, su.grid, times, cfg.level - 1);
    sink.at_most(cfg.level, "ky_fan probe(X at level, X at level - 1)", uniqueness_probe(a, b, su.phi, su.t, wo).value,
                 cfg.tolerance);
  });
  checks.run("shift_detected", [&](RowSink& sink) {
    const double c = p.at("shift").get<double>();
    const double r = su.phi.support_radius();
    const Box box = su.op.dim() == 1 ? Box{{-r, r}} : Box{{-r, r}, {-r, r}};
    const double mass = classical_integral(
        [&](std::span<const double> x) { return su.phi.value({x[0], x.size() > 1 ? x[1] : 0.0}); }, box,
        su.op.dim() == 1 ? 10 : 7);
    const double expected = std::min(std::abs(c * mass), 1.0);
    const double got = uniqueness_probe(a, a.shifted(c), su.phi, su.t, wo).value;
    sink.at_most(cfg.level, "|probe(X, X + c) - min(|c int phi|, 1)|", std::abs(got - expected), cfg.tolerance);
  });
}

}  // namespace detail

/// Runs a validated scenario. Rows come back in canonical (check_id, level) order.
inline RunReport run_scenario(const ScenarioConfig& cfg) {
  RunReport report;
  detail::Checks checks(cfg);
  const std::string& id = cfg.scenario;
  if (id == "quasi_norm") detail::run_quasi_norm(cfg, checks);
  else if (id == "subset_inequality") detail::run_subset_inequality(cfg, checks);
  else if (id == "riemann") detail::run_riemann(cfg, checks);
  else if (id == "pathological") detail::run_pathological(cfg, checks);
  else if (id == "fubini") detail::run_fubini(cfg, checks);
  else if (id == "product") detail::run_product(cfg, checks);
  else if (id == "triangle") detail::run_triangle(cfg, checks);
  else if (id == "parts") detail::run_parts(cfg, checks);
  else if (id == "semigroup") detail::run_semigroup(cfg, checks);
  else if (id == "kernel_gate") detail::run_kernel_gate(cfg, checks);
  else if (id == "spde_baseline") detail::run_spde_baseline(cfg, checks, report);
  else if (id == "deterministic_crosscheck") detail::run_deterministic_crosscheck(cfg, checks);
  else if (id == "multi_measure") detail::run_multi_measure(cfg, checks);
  else if (id == "uniqueness") detail::run_uniqueness(cfg, checks);
  else throw ParameterError("run_scenario: unknown scenario '" + id + "'");
  report.rows = checks.take();
  sort_rows(report.rows);
  report.overall = combine(report.rows);
  return report;
}

/// Writes report.csv, verdicts.csv and any artifacts into `dir`.
inline void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.csv", report_csv(report.rows));
  write_text(dir / "verdicts.csv", verdicts_csv(report.rows));
  for (const auto& [name, content] : report.artifacts) write_text(dir / name, content);
}

}  // namespace stochint
