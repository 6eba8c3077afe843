// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "stochint/stochint.hpp"

using namespace stochint;

namespace {

constexpr std::uint64_t kSeed = 42;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [violated]");
  }
};

std::string num(double v) { return format_number(v); }

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << (o.detail.tellp() > 0 ? "; " : "") << "exception: " << e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_s > 0.0) o.require(s < budget_s, "runtime " + num(s) + " s < " + num(budget_s) + " s");
  if (!o.pass) ++failures;
  std::printf("%s criterion %d: %s (%s) [%.2f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.str().c_str(), s);
  std::fflush(stdout);
}

double gauss(const Point& x) { return std::exp(-x[0] * x[0]); }

ValidatedOperator heat_validated() {
  const std::vector<double> times{0.1, 0.5};
  const KernelGate gate = validate_kernel(EllipticOperator::heat(), times);
  if (!gate.validated) throw Error("heat kernel failed its validation gate");
  return *gate.validated;
}

void ky_fan_analytics(Outcome& o) {
  const std::size_t m = 10000;
  const ProbSpace space(m, kSeed);
  for (double c : {0.0, 0.3, 0.7, 2.0}) {
    const double v = ky_fan(space.constant(c)).value;
    o.require(v == std::min(c, 1.0), "ky_fan(" + num(c) + ") = " + num(v));
  }
  std::uint64_t tag = stream_tag::user;
  for (double p : {0.1, 0.5}) {
    const Ensemble ind = space.generate(tag++, [p](Stream& s) { return s.uniform() < p ? 1.0 : 0.0; });
    const double err = std::abs(ky_fan(ind).value - p);
    o.require(err <= 2.0 / std::sqrt(static_cast<double>(m)), "|bernoulli(" + num(p) + ") - p| = " + num(err));
  }
}

void subset_inequality(Outcome& o) {
  const ProbSpace space(1000, kSeed);
  std::size_t violations = 0;
  double worst = 0.0;
  for (std::uint64_t f = 0; f < 100; ++f) {
    Stream meta(kSeed, f, stream_tag::user + 20);
    const std::size_t l = 1 + static_cast<std::size_t>(meta.uniform() * 10.0);
    std::vector<Ensemble> xs;
    std::vector<double> cs;
    for (std::size_t k = 0; k < l; ++k) {
      const double scale = std::exp(std::log(0.01) * meta.uniform());
      const double p = 0.01 + 0.49 * meta.uniform();
      const std::uint64_t tag = stream_tag::user + 0x10000 + f * 32 + k;
      switch ((f + k) % 3) {
        case 0: xs.push_back(space.generate(tag, [scale](Stream& s) { return scale * s.normal(); })); break;
        case 1: xs.push_back(space.generate(tag, [scale](Stream& s) { return 0.1 * scale * s.cauchy(); })); break;
        default: xs.push_back(space.generate(tag, [scale, p](Stream& s) { return s.uniform() < p ? 2.0 * scale : 0.0; }));
      }
      cs.push_back(2.0 * meta.uniform() - 1.0);
    }
    const SubsetInequality r = check_subset_inequality(xs, cs);
    violations += r.holds ? 0 : 1;
    worst = std::max(worst, r.ratio);
  }
  o.require(violations == 0, "violations " + std::to_string(violations) + " of 100, max ratio " + num(worst));
}

void fubini(Outcome& o) {
  const ProbSpace space(1000, kSeed);
  const SpaceTimeFunction h = [](std::span<const double> x, double s) { return std::exp(-x[0] * x[0]) * (1.0 + s); };
  const Box b{{0.0, 1.0}};
  struct Case {
    const char* name;
    DriverSpec spec;
    double tol;
  };
  for (const Case& c : {Case{"wiener", DriverSpec::wiener(1.0, 256), 0.02}, Case{"fbm H=0.7", DriverSpec::fbm(1.0, 256, 0.7), 0.05}}) {
    const IdentityResidual r = fubini_residual(make_driver(space, c.spec), h, b, {8, 3, c.tol, kSeed});
    std::string trace;
    for (const auto& t : r.trace) trace += (trace.empty() ? "" : "/") + num(t.residual);
    o.require(r.residual.value <= c.tol, std::string(c.name) + " residual " + num(r.residual.value) + " <= " + num(c.tol));
    o.require(r.trace_nonincreasing, std::string(c.name) + " levels 6..8 " + trace + " non-increasing within 2/sqrt(M)");
  }
}

void parts(Outcome& o) {
  const ProbSpace space(1000, kSeed);
  const Driver d = make_driver(space, DriverSpec::wiener(1.0, 1024));
  const RandomField w = path_field(d);
  const IdentityOptions opts{8, 3, 0.02, kSeed};
  auto e = [](double u) { return std::exp(u); };
  const IdentityResidual main = parts_identity_residual(w, e, e, 1.0, opts);
  o.require(main.residual.value <= 0.02, "g = e^u, xi = W: " + num(main.residual.value) + " <= 0.02");
  const IdentityResidual one = parts_identity_residual(w, [](double) { return 1.0; }, [](double) { return 0.0; }, 1.0, opts);
  o.require(one.residual.value <= 1e-6, "g = 1: " + num(one.residual.value) + " <= 1e-6");
  const RandomField unit = RandomField::deterministic(space, 1, [](std::span<const double>) { return 1.0; });
  const IdentityResidual lin = parts_identity_residual(unit, [](double u) { return u; }, [](double) { return 1.0; }, 1.0, opts);
  o.require(lin.residual.value <= 1e-6, "g = u, xi = 1: " + num(lin.residual.value) + " <= 1e-6");
}

void triangle(Outcome& o) {
  const ProbSpace space(1000, kSeed);
  const IdentityOptions opts{8, 3, 0.02, kSeed};
  const RandomField v = RandomField::deterministic(space, 1, [](std::span<const double> x) { return x[0]; });
  const IdentityResidual lin = triangle_identity_residual(v, 1.0, opts);
  o.require(std::abs(lin.lhs[0] - 1.0 / 6.0) <= 1e-4, "xi = v lhs " + num(lin.lhs[0]));
  o.require(std::abs(lin.rhs[0] - 1.0 / 6.0) <= 1e-4, "xi = v rhs " + num(lin.rhs[0]));
  const Driver d = make_driver(space, DriverSpec::wiener(1.0, 1024));
  const IdentityResidual w = triangle_identity_residual(path_field(d), 1.0, opts);
  o.require(w.residual.value <= 0.02, "xi = W: " + num(w.residual.value) + " <= 0.02");
}

void semigroup(Outcome& o) {
  const EllipticOperator heat = EllipticOperator::heat();
  const GridSpec grid = GridSpec::with_spacing(1, -4.0, 4.0, 0.05);
  const double g = semigroup_identity_residual(heat, TestFunction::gaussian(1, {0.0, 0.0}, 1.0), 0.5, grid);
  o.require(g <= 1e-3, "gaussian sup residual " + num(g) + " <= 1e-3");
  const double c = semigroup_identity_residual(heat, TestFunction::constant(1, 1.0), 0.5, grid);
  o.require(c <= 1e-8, "constant sup residual " + num(c) + " <= 1e-8");
}

void kernel_gate(Outcome& o) {
  const EllipticOperator heat = EllipticOperator::heat();
  const std::vector<double> times{0.1, 0.5};
  const KernelGate gate = validate_kernel(heat, times, 0.05);
  for (const auto& r : gate.rows) o.require(r.rel_linf <= 5e-3, "t = " + num(r.t) + " rel L-inf " + num(r.rel_linf));
  for (double t : {0.1, 0.5, 1.0}) {
    const double err = std::abs(kernel_mass(heat, {0.0, 0.0}, t) - 1.0);
    o.require(err <= 1e-8, "mass error t = " + num(t) + " " + num(err));
  }
  std::vector<Point> offsets;
  for (int i = -32; i <= 32; ++i) offsets.push_back({0.125 * i, 0.0});
  const KernelBound kb = kernel_bound_check(heat, offsets, {0.05, 1.0});
  const double e1 = std::abs(kb.c1 * std::sqrt(4.0 * std::numbers::pi) - 1.0);
  const double e2 = std::abs(kb.c2 / 0.25 - 1.0);
  o.require(kb.holds, "bound holds on held-out sample");
  o.require(e1 <= 0.01, "C1 = " + num(kb.c1) + " rel err " + num(e1));
  o.require(e2 <= 0.01, "C2 = " + num(kb.c2) + " rel err " + num(e2));
}

void spde_baseline(Outcome& o) {
  const auto vop = heat_validated();
  const ProbSpace space(1000, kSeed);
  const Driver d = make_driver(space, DriverSpec::wiener(1.0, 1024));
  ProblemData data;
  data.initial.push_back({space.constant(1.0), gauss});
  data.forcing.push_back({gauss, nullptr, d});
  const GridSpec grid = GridSpec::with_spacing(1, -8.0, 8.0, 0.05);
  const TestFunction phi = TestFunction::gaussian(1, {0.0, 0.0}, 1.0);
  const std::vector<double> times{0.5};
  std::vector<double> r;
  for (int level = 6; level <= 8; ++level) {
    const FieldSolution sol = mild_solution(vop, data, grid, times, level);
    r.push_back(weak_residual(sol, phi, 0.5, {0.05}).residual.value);
  }
  o.require(r[2] <= 0.05, "weak residual at level 8 " + num(r[2]) + " <= 0.05");
  o.require(r[0] > r[1] && r[1] > r[2], "levels 6..8 " + num(r[0]) + "/" + num(r[1]) + "/" + num(r[2]) + " decreasing");

  ProblemData one;
  one.forcing.push_back({[](const Point&) { return 1.0; }, nullptr, d});
  const FieldSolution s1 = mild_solution(vop, one, grid, times, 8);
  std::size_t mid = 0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (std::abs(grid.node(k)[0]) < std::abs(grid.node(mid)[0])) mid = k;
  const Ensemble x = s1.at(0, mid);
  const double se = 0.5 * std::sqrt(2.0 / static_cast<double>(x.size() - 1));
  const double z = std::abs(x.variance() - 0.5) / se;
  o.require(z <= 3.0, "f = 1: Var X(0, 0.5) = " + num(x.variance()) + ", " + num(z) + " standard errors from t");
}

void crosscheck(Outcome& o) {
  const auto vop = heat_validated();
  const ProbSpace space(100, kSeed);
  ProblemData data;
  data.initial.push_back({space.generate(stream_tag::initial_field, [](Stream& s) { return 1.0 + 0.25 * s.normal(); }), gauss});
  data.forcing.push_back({gauss, nullptr, make_driver(space, DriverSpec::deterministic(1.0, 1024, 1.0))});
  const GridSpec grid = GridSpec::with_spacing(1, -4.0, 4.0, 0.05);
  const std::vector<double> times{0.25, 0.5, 1.0};
  const CrosscheckReport rep = deterministic_crosscheck(vop, data, grid, times, 10);
  for (const auto& r : rep.rows) o.require(r.rel_linf <= 1e-2, "t = " + num(r.t) + " rel L-inf " + num(r.rel_linf));
}

void pathological(Outcome& o) {
  const ProbSpace space(10000, kSeed);
  double floor = 1.0;
  for (const auto& row : pathological_demo(space, 8)) {
    floor = std::min(floor, row.norm.value);
    if (row.norm.value < 0.05) o.require(false, "n = " + std::to_string(row.n) + " norm " + num(row.norm.value));
  }
  o.require(floor >= 0.05, "min over n <= 8 of ky_fan((1/n) int_{A_n} xi) = " + num(floor) + " >= 0.05");
  const RandomField xi = build_pathological_field(space);
  double worst = 0.0;
  for (double x : {0.9, 0.5, 0.3, 0.2, 0.1, 0.07}) worst = std::max(worst, ky_fan_distance(xi(x), xi(x + 1e-4)).value);
  o.require(worst <= 0.05, "max ky_fan(xi(x) - xi(x + 1e-4)) = " + num(worst) + " <= 0.05");
}

void determinism(Outcome& o) {
  for (const char* id : {"fubini", "pathological", "spde_baseline", "multi_measure"}) {
    const ConfigResult cr = resolve_config(json{{"scenario", id}, {"seed", kSeed}});
    if (!cr.ok()) throw Error(cr.errors.front());
    set_worker_count(1);
    const std::string a = report_csv(run_scenario(*cr.config).rows, false);
    const std::string b = report_csv(run_scenario(*cr.config).rows, false);
    set_worker_count(3);
    const std::string c = report_csv(run_scenario(*cr.config).rows, false);
    set_worker_count(1);
    o.require(a == b && a == c, std::string(id) + " byte-identical across reruns and 1 vs 3 workers");
  }
}

}  // namespace

int main() {
  set_worker_count(1);
  criterion(1, "Ky Fan analytics", 1.0, ky_fan_analytics);
  criterion(2, "subset inequality over 100 random families", 30.0, subset_inequality);
  criterion(3, "Fubini interchange", 60.0, fubini);
  criterion(4, "integration by parts", 0.0, parts);
  criterion(5, "triangle identity", 0.0, triangle);
  criterion(6, "semigroup identity", 0.0, semigroup);
  criterion(7, "kernel validation gate", 0.0, kernel_gate);
  criterion(8, "SPDE baseline", 0.0, spde_baseline);
  criterion(9, "deterministic crosscheck", 0.0, crosscheck);
  criterion(10, "pathological example", 0.0, pathological);
  criterion(11, "determinism", 0.0, determinism);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
