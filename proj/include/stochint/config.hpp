#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "stochint/catalog.hpp"
#include "stochint/drivers.hpp"
#include "stochint/io.hpp"
#include "stochint/parabolic.hpp"

namespace stochint {

using json = nlohmann::json;

inline constexpr std::size_t kStatisticalFloor = 100;
inline constexpr std::size_t kMaxPaths = 1'000'000;

struct ScenarioInfo {
  std::string id;
  std::string anchor;
  std::string summary;
  double tolerance;
  std::optional<int> level;  // empty: the scenario has no refinement levels
  std::size_t paths;
  bool ky_fan;               // makes Ky Fan assertions, so M must clear the statistical floor
  json params;               // scenario keys with their defaults; doubles as the schema
};

namespace detail {

inline json driver_defaults(std::size_t grid_size) {
  return {{"kind", "wiener"}, {"horizon", 1.0}, {"grid_size", grid_size}, {"hurst", 0.7}, {"rate", 1.0}};
}

inline json operator_defaults() {
  return {{"dim", 1}, {"a", json::array({json::array({1.0})})}, {"b", json::array({0.0})}, {"c", 0.0}};
}

inline json grid_defaults(double lo, double hi, double h) { return {{"lo", lo}, {"hi", hi}, {"spacing", h}}; }

}  // namespace detail

inline const std::vector<ScenarioInfo>& scenario_catalog() {
  using detail::driver_defaults;
  using detail::grid_defaults;
  using detail::operator_defaults;
  static const std::vector<ScenarioInfo> list{
      {"quasi_norm", "Ky Fan quasi-norm inf{d : P(|X| > d) <= d}",
       "closed forms on constants and Bernoulli indicators, triangle inequality", 1e-12, std::nullopt, 10000, true,
       {{"constants", {0.0, 0.3, 0.7, 2.0}}, {"bernoulli_p", {0.1, 0.5}}}},
      {"subset_inequality", "||sum c_k xi_k|| <= 16 max_V ||sum_{k in V} xi_k|| for |c_k| <= 1",
       "randomized mixed Gaussian, heavy-tailed and indicator families", 1.0, std::nullopt, 1000, true,
       {{"families", 100}, {"max_terms", 10}}},
      {"riemann", "Riemann integral of a random function as a limit in probability",
       "constant, deterministic, stochastic-integral and improper integrands", 0.02, 8, 1000, true,
       {{"driver", driver_defaults(256)}, {"improper_radius", 8.0}}},
      {"pathological", "stochastic continuity does not imply integrability",
       "non-decaying (1/n) int_{A_n} xi against stochastic continuity at probe points", 0.05, std::nullopt, 10000,
       true,
       {{"n_max", 8}, {"probes", {0.9, 0.5, 0.3, 0.2, 0.1, 0.07}}, {"gap", 1e-4}, {"base", 5.0}, {"k_max", 20}}},
      {"fubini", "int_B dx int h dmu = int dmu int_B h dx",
       "stochastic Fubini interchange for a deterministic integrand", 0.02, 8, 1000, true,
       {{"driver", driver_defaults(256)},
        {"integrand", "gauss_x_linear_s"},
        {"dim", 1},
        {"box", {0.0, 1.0}},
        {"improper", false},
        {"radius", 8.0}}},
      {"product", "product integral over B x S equals both iterated integrals",
       "random-field Fubini on a product box", 0.02, 8, 1000, true,
       {{"driver", driver_defaults(1024)}, {"field", "ws_exp_x"}, {"box_x", {0.0, 1.0}}, {"box_s", {0.0, 1.0}}}},
      {"triangle", "int_0^s du int_0^u xi dv = int_0^s (s - v) xi dv",
       "triangle identity for random integrands", 0.02, 8, 1000, true,
       {{"driver", driver_defaults(1024)}, {"field", "w"}, {"s", 1.0}}},
      {"parts", "g(s) int_0^s xi = int_0^s g xi + int_0^s g'(u) int_0^u xi du",
       "integration by parts for random integrands", 0.02, 8, 1000, true,
       {{"driver", driver_defaults(1024)}, {"field", "w"}, {"weight", "exp"}, {"s", 1.0}}},
      {"semigroup", "S(t)g = g + A int_0^t S(s)g ds",
       "heat-kernel convolution, semigroup integral identity, mass and composition", 1e-3, std::nullopt, 100,
       false,
       {{"operator", operator_defaults()},
        {"test_function", "gauss"},
        {"t", 0.5},
        {"grid", grid_defaults(-4.0, 4.0, 0.05)},
        {"constant", 1.0},
        {"mass_times", {0.1, 0.5, 1.0}}}},
      {"kernel_gate", "closed-form fundamental solution and its Gaussian bound",
       "kernel against a Crank-Nicolson oracle, mass identity, bound constants", kKernelGateTolerance,
       std::nullopt, 100, false,
       {{"operator", operator_defaults()},
        {"times", {0.1, 0.5}},
        {"spacing", 0.05},
        {"mass_times", {0.1, 0.5, 1.0}},
        {"bound_t_range", {0.05, 1.0}}}},
      {"spde_baseline", "weak form: int X phi = int xi phi + int A*phi int X ds + int dmu int f phi",
       "mild solution of dX = AX dt + f dmu checked against the weak formulation", 0.05, 8, 1000, true,
       {{"operator", operator_defaults()},
        {"driver", driver_defaults(1024)},
        {"forcing", "gauss_x"},
        {"initial", "gauss"},
        {"test_function", "gauss"},
        {"grid", grid_defaults(-8.0, 8.0, 0.05)},
        {"times", {0.25, 0.5}},
        {"t", 0.5},
        {"gate_times", {0.1, 0.5}},
        {"export", true}}},
      {"deterministic_crosscheck", "mild solution with a deterministic measure solves u_t = Au + f rho",
       "mild solution against a Crank-Nicolson oracle", 1e-2, 10, 100, false,
       {{"operator", operator_defaults()},
        {"density", 1.0},
        {"horizon", 1.0},
        {"forcing", "gauss_x"},
        {"initial", "gauss_random_amp"},
        {"grid", grid_defaults(-4.0, 4.0, 0.05)},
        {"times", {0.25, 0.5, 1.0}},
        {"gate_times", {0.1, 0.5}}}},
      {"multi_measure", "X = S(t)xi + sum_i int S(t - s) f_i dmu_i",
       "several driving measures: weak form, additivity, reduction, variance doubling", 0.05, 7, 1000, true,
       {{"operator", operator_defaults()},
        {"drivers",
         {driver_defaults(1024),
          {{"kind", "compensated_poisson"}, {"horizon", 1.0}, {"grid_size", 1024}, {"hurst", 0.7}, {"rate", 4.0}}}},
        {"forcings", {"gauss_x", "gauss_x"}},
        {"initial", "gauss"},
        {"test_function", "gauss"},
        {"grid", grid_defaults(-8.0, 8.0, 0.05)},
        {"t", 0.5},
        {"gate_times", {0.1, 0.5}}}},
      {"uniqueness", "int (X_A - X_B)(x, t) phi(x) dx = 0 via psi_{t,s} = S(t - s) phi",
       "projection agreement of two solutions of one problem", 0.02, 8, 1000, true,
       {{"operator", operator_defaults()},
        {"driver", driver_defaults(1024)},
        {"forcing", "gauss_x"},
        {"initial", "gauss"},
        {"test_function", "gauss"},
        {"grid", grid_defaults(-8.0, 8.0, 0.05)},
        {"t", 0.5},
        {"shift", 0.1},
        {"gate_times", {0.1, 0.5}}}},
  };
  return list;
}

inline const ScenarioInfo* find_scenario(const std::string& id) {
  for (const auto& s : scenario_catalog())
    if (s.id == id) return &s;
  return nullptr;
}

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

/// Close matches for an unknown scenario id; every id when nothing is close.
inline std::vector<std::string> suggest_scenarios(const std::string& name) {
  std::vector<std::string> out;
  for (const auto& s : scenario_catalog())
    if (edit_distance(name, s.id) <= 3 || (!name.empty() && s.id.find(name) != std::string::npos))
      out.push_back(s.id);
  if (out.empty())
    for (const auto& s : scenario_catalog()) out.push_back(s.id);
  return out;
}

inline std::string list_scenarios() {
  std::string out;
  for (const auto& s : scenario_catalog()) {
    out += s.id + "\n  anchor:    " + s.anchor + "\n  checks:    " + s.summary +
           "\n  tolerance: " + format_number(s.tolerance) + "\n  paths:     " + std::to_string(s.paths);
    if (s.level) out += "\n  level:     " + std::to_string(*s.level);
    out += '\n';
  }
  return out;
}

// ---- resolved configuration --------------------------------------------------------

struct ScenarioConfig {
  std::string scenario;
  std::size_t paths = 1000;
  std::uint64_t seed = 0;
  int level = 0;  // 0 when the scenario has no refinement levels
  double tolerance = 0.02;
  std::string output_dir;
  json params;  // scenario keys, defaults filled in

  const ScenarioInfo& info() const { return *find_scenario(scenario); }

  json to_json() const {
    json j = params;
    j["scenario"] = scenario;
    j["paths"] = paths;
    j["seed"] = seed;
    if (info().level) j["level"] = level;
    j["tolerance"] = tolerance;
    if (!output_dir.empty()) j["output_dir"] = output_dir;
    return j;
  }
};

struct ConfigResult {
  std::optional<ScenarioConfig> config;
  std::vector<std::string> errors;
  std::vector<std::string> suggestions;  // for an unknown scenario id

  bool ok() const { return errors.empty(); }
};

namespace detail {

inline const char* type_name(const json& v) {
  if (v.is_number_integer()) return "an integer";
  if (v.is_number()) return "a number";
  if (v.is_string()) return "a string";
  if (v.is_boolean()) return "a boolean";
  if (v.is_array()) return "an array";
  if (v.is_object()) return "an object";
  return "null";
}

// Checks `value` against the shape of `schema` (a defaults value) and returns the
// valid part: unknown keys and mistyped entries are reported and dropped, so the
// caller's defaults stand in for them during the semantic checks.
inline std::optional<json> sanitize(const json& value, const json& schema, const std::string& path,
                                    std::vector<std::string>& errors) {
  auto fail = [&](const std::string& what) -> std::optional<json> {
    errors.push_back(path + ": " + what);
    return std::nullopt;
  };
  if (schema.is_object()) {
    if (!value.is_object()) return fail("expected an object");
    json out = json::object();
    for (const auto& [key, v] : value.items()) {
      if (!schema.contains(key)) {
        errors.push_back(path + "." + key + ": unknown key");
        continue;
      }
      if (auto ok = sanitize(v, schema.at(key), path + "." + key, errors)) out[key] = std::move(*ok);
    }
    return out;
  }
  if (schema.is_array()) {
    if (!value.is_array()) return fail("expected an array");
    if (schema.empty()) return value;
    json out = json::array();
    bool all_ok = true;
    for (std::size_t i = 0; i < value.size(); ++i) {
      auto ok = sanitize(value[i], schema[0], path + "[" + std::to_string(i) + "]", errors);
      all_ok = all_ok && ok.has_value();
      if (ok) out.push_back(std::move(*ok));
    }
    if (!all_ok) return std::nullopt;
    return out;
  }
  if (schema.is_number_integer()) {
    if (!value.is_number_integer()) return fail(std::string("expected an integer, got ") + type_name(value));
  } else if (schema.is_number()) {
    if (!value.is_number()) return fail(std::string("expected a number, got ") + type_name(value));
  } else if (schema.is_string()) {
    if (!value.is_string()) return fail(std::string("expected a string, got ") + type_name(value));
  } else if (schema.is_boolean()) {
    if (!value.is_boolean()) return fail(std::string("expected a boolean, got ") + type_name(value));
  }
  return value;
}

// Defaults overlaid by the user's values; array elements that are objects are completed from the schema.
inline json merge(const json& schema, const json& value) {
  if (schema.is_object() && value.is_object()) {
    json out = schema;
    for (const auto& [key, v] : value.items()) out[key] = schema.contains(key) ? merge(schema.at(key), v) : v;
    return out;
  }
  if (schema.is_array() && value.is_array() && !schema.empty() && schema[0].is_object()) {
    json out = json::array();
    for (const auto& v : value) out.push_back(merge(schema[0], v));
    return out;
  }
  return value;
}

class Checker {
 public:
  explicit Checker(std::vector<std::string>& errors) : errors_(errors) {}

  void require(bool ok, const std::string& what) {
    if (!ok) errors_.push_back(what);
  }

  template <class T>
  void catalog_name(const json& p, const std::string& key, const std::vector<catalog::Entry<T>>& list) {
    const std::string name = p.at(key).get<std::string>();
    if (catalog::find(list, name)) return;
    std::string known;
    for (const auto& n : catalog::names(list)) known += (known.empty() ? "" : ", ") + n;
    errors_.push_back(key + ": unknown catalog entry '" + name + "' (known: " + known + ")");
  }

  // level 0: the scenario has no refinement levels
  void driver(const json& d, const std::string& path, int level) {
    const std::string kind = d.at("kind").get<std::string>();
    require(kind == "wiener" || kind == "fbm" || kind == "compensated_poisson" || kind == "deterministic",
            path + ".kind: unknown driver kind '" + kind + "' (known: wiener, fbm, compensated_poisson, deterministic)");
    const double horizon = d.at("horizon").get<double>();
    require(horizon > 0.0 && std::isfinite(horizon), path + ".horizon: must be positive");
    const auto n = d.at("grid_size").get<std::int64_t>();
    const bool pow2 = n >= 2 && n <= static_cast<std::int64_t>(kMaxDriverGrid) &&
                      std::has_single_bit(static_cast<std::uint64_t>(n));
    require(pow2, path + ".grid_size: must be a power of two in [2, 16384]");
    if (pow2 && level > 0)
      require(n >= (std::int64_t{1} << level), path + ".grid_size: below 2^level = " + std::to_string(1 << level));
    if (kind == "fbm") {
      const double h = d.at("hurst").get<double>();
      require(h > 0.5 && h < 1.0, path + ".hurst: H out of (1/2,1)");
    }
    if (kind == "compensated_poisson") require(d.at("rate").get<double>() > 0.0, path + ".rate: must be positive");
    if (kind == "deterministic") require(std::isfinite(d.at("rate").get<double>()), path + ".rate: must be finite");
  }

  void op(const json& o, bool self_adjoint = false) {
    const auto dim = o.at("dim").get<std::int64_t>();
    if (dim != 1 && dim != 2) {
      errors_.push_back("operator.dim: must be 1 or 2");
      return;
    }
    const json& a = o.at("a");
    const json& b = o.at("b");
    bool shape_ok = a.size() == static_cast<std::size_t>(dim);
    for (const auto& row : a) shape_ok = shape_ok && row.size() == static_cast<std::size_t>(dim);
    require(shape_ok, "operator.a: must be a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
    require(b.size() == static_cast<std::size_t>(dim), "operator.b: must have " + std::to_string(dim) + " entries");
    if (shape_ok) {
      const double a11 = a[0][0].get<double>();
      const double a12 = dim == 2 ? a[0][1].get<double>() : 0.0;
      const double a21 = dim == 2 ? a[1][0].get<double>() : 0.0;
      const double a22 = dim == 2 ? a[1][1].get<double>() : 1.0;
      require(a12 == a21, "operator.a: must be symmetric");
      const double mean = 0.5 * (a11 + a22), rad = std::hypot(0.5 * (a11 - a22), a12);
      require(mean - rad >= kEllipticityFloor, "operator.a: not positive definite");
    }
    if (self_adjoint && b.size() == static_cast<std::size_t>(dim)) {
      bool zero = true;
      for (const auto& v : b) zero = zero && v.get<double>() == 0.0;
      require(zero, "operator.b: the uniqueness probe needs a self-adjoint operator (b = 0)");
    }
  }

  void grid(const json& g) {
    const double lo = g.at("lo").get<double>(), hi = g.at("hi").get<double>(), h = g.at("spacing").get<double>();
    require(lo < hi, "grid: lo must be below hi");
    require(h > 0.0, "grid.spacing: must be positive");
    if (lo < hi && h > 0.0) {
      const double cells = (hi - lo) / h;
      require(std::abs(cells - std::round(cells)) <= 1e-9 * std::max(1.0, cells),
              "grid: extent is not a multiple of the spacing");
      require(cells <= 4096.0, "grid: more than 4096 cells per axis");
    }
  }

  void positive_times(const json& arr, const std::string& key, bool sorted = true) {
    require(!arr.empty(), key + ": must not be empty");
    double prev = 0.0;
    for (const auto& v : arr) {
      const double t = v.get<double>();
      require(t > 0.0, key + ": times must be positive");
      if (sorted) require(t > prev || t <= 0.0, key + ": times must be strictly increasing");
      prev = t;
    }
  }

 private:
  std::vector<std::string>& errors_;
};

inline void validate_params(const ScenarioInfo& info, const json& p, int level, std::vector<std::string>& errors) {
  Checker c(errors);
  const int lvl = info.level ? level : 0;
  const std::string& id = info.id;
  if (p.contains("operator")) c.op(p.at("operator"), id == "uniqueness");
  if (p.contains("grid")) c.grid(p.at("grid"));
  if (p.contains("driver")) c.driver(p.at("driver"), "driver", lvl);
  if (p.contains("drivers")) {
    c.require(!p.at("drivers").empty(), "drivers: at least one driver");
    for (std::size_t i = 0; i < p.at("drivers").size(); ++i)
      c.driver(p.at("drivers")[i], "drivers[" + std::to_string(i) + "]", lvl);
  }
  if (p.contains("forcings")) {
    c.require(p.at("forcings").size() == p.at("drivers").size(), "forcings: one forcing per driver");
    for (const auto& f : p.at("forcings"))
      c.catalog_name(json{{"forcings", f}}, "forcings", catalog::forcings());
  }
  if (p.contains("forcing")) c.catalog_name(p, "forcing", catalog::forcings());
  if (p.contains("initial")) c.catalog_name(p, "initial", catalog::initial_fields());
  if (p.contains("test_function")) c.catalog_name(p, "test_function", catalog::test_functions());
  if (p.contains("weight")) c.catalog_name(p, "weight", catalog::weights());
  if (p.contains("integrand")) c.catalog_name(p, "integrand", catalog::integrands());
  if (id == "product") c.catalog_name(p, "field", catalog::product_fields());
  if (id == "triangle" || id == "parts") {
    c.catalog_name(p, "field", catalog::line_fields());
    const double s = p.at("s").get<double>();
    c.require(s > 0.0 && s <= p.at("driver").at("horizon").get<double>(), "s: must lie in (0, driver.horizon]");
  }
  for (const char* key : {"times", "gate_times", "mass_times"})
    if (p.contains(key)) c.positive_times(p.at(key), key);
  if (p.contains("t")) {
    const double t = p.at("t").get<double>();
    c.require(t > 0.0, "t: must be positive");
    if (p.contains("times")) {
      bool listed = false;
      for (const auto& v : p.at("times")) listed = listed || v.get<double>() == t;
      c.require(listed, "t: must be one of times");
    }
    if (p.contains("driver")) c.require(t <= p.at("driver").at("horizon").get<double>(), "t: beyond driver.horizon");
    if (p.contains("drivers"))
      for (const auto& d : p.at("drivers")) c.require(t <= d.at("horizon").get<double>(), "t: beyond a driver horizon");
  }
  if (p.contains("times") && p.contains("driver") && !p.at("times").empty())
    c.require(p.at("times").back().get<double>() <= p.at("driver").at("horizon").get<double>(),
              "times: beyond driver.horizon");
  if (id == "deterministic_crosscheck") {
    c.require(p.at("horizon").get<double>() > 0.0, "horizon: must be positive");
    if (!p.at("times").empty())
      c.require(p.at("times").back().get<double>() <= p.at("horizon").get<double>(), "times: beyond horizon");
  }
  if (id == "fubini") {
    const auto dim = p.at("dim").get<std::int64_t>();
    c.require(dim == 1 || dim == 2, "dim: must be 1 or 2");
    const json& box = p.at("box");
    c.require(box.size() == 2 && box[0].get<double>() < box[1].get<double>(), "box: expected [lo, hi] with lo < hi");
    c.require(p.at("radius").get<double>() > 0.0, "radius: must be positive");
    if (p.at("improper").get<bool>()) {
      const auto* e = catalog::find(catalog::integrands(), p.at("integrand").get<std::string>());
      c.require(!e || e->make.decays_in_x, "integrand: does not decay in x, so it has no improper integral");
    }
  }
  if (id == "product")
    for (const char* key : {"box_x", "box_s"}) {
      const json& box = p.at(key);
      c.require(box.size() == 2 && box[0].get<double>() < box[1].get<double>(),
                std::string(key) + ": expected [lo, hi] with lo < hi");
    }
  if (id == "quasi_norm")
    for (const auto& v : p.at("bernoulli_p")) c.require(v.get<double>() > 0.0 && v.get<double>() < 1.0, "bernoulli_p: must lie in (0, 1)");
  if (id == "subset_inequality") {
    const auto l = p.at("max_terms").get<std::int64_t>();
    c.require(l >= 1 && l <= static_cast<std::int64_t>(kMaxSubsetTerms), "max_terms: must lie in [1, 20]");
    c.require(p.at("families").get<std::int64_t>() >= 1, "families: at least one");
  }
  if (id == "pathological") {
    const auto n = p.at("n_max").get<std::int64_t>();
    c.require(n >= 1 && n <= kMaxPathologicalN, "n_max: must lie in [1, 12]");
    c.require(p.at("gap").get<double>() > 0.0, "gap: must be positive");
    c.require(p.at("base").get<double>() > 1.0, "base: must exceed 1");
    c.require(p.at("k_max").get<std::int64_t>() >= 1, "k_max: at least 1");
    for (const auto& v : p.at("probes")) {
      const double x = v.get<double>();
      c.require(x > 0.0 && x + p.at("gap").get<double>() <= 1.0, "probes: x and x + gap must lie in (0, 1]");
    }
  }
  if (id == "kernel_gate") {
    c.positive_times(p.at("times"), "times");
    c.require(p.at("spacing").get<double>() > 0.0, "spacing: must be positive");
    const json& r = p.at("bound_t_range");
    c.require(r.size() == 2 && r[0].get<double>() > 0.0 && r[0].get<double>() < r[1].get<double>(),
              "bound_t_range: expected [lo, hi] with 0 < lo < hi");
  }
}

}  // namespace detail

/// Resolves a parsed config against the scenario schema. Collects every violation.
inline ConfigResult resolve_config(const json& raw) {
  ConfigResult res;
  if (!raw.is_object()) {
    res.errors.push_back("config: expected a JSON object at the top level");
    return res;
  }
  if (!raw.contains("scenario")) {
    res.errors.push_back("scenario: missing required key");
    return res;
  }
  if (!raw.at("scenario").is_string()) {
    res.errors.push_back("scenario: expected a string");
    return res;
  }
  const std::string id = raw.at("scenario").get<std::string>();
  const ScenarioInfo* info = find_scenario(id);
  if (!info) {
    res.errors.push_back("scenario: unknown scenario '" + id + "'");
    res.suggestions = suggest_scenarios(id);
    return res;
  }

  ScenarioConfig cfg;
  cfg.scenario = id;
  cfg.paths = info->paths;
  cfg.tolerance = info->tolerance;
  cfg.level = info->level.value_or(0);
  json user_params = json::object();
  auto& errors = res.errors;

  for (const auto& [key, v] : raw.items()) {
    if (key == "scenario") continue;
    if (key == "paths") {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 2)
        errors.push_back("paths: expected an integer >= 2");
      else if (v.get<std::int64_t>() > static_cast<std::int64_t>(kMaxPaths))
        errors.push_back("paths: above the limit of 1000000");
      else
        cfg.paths = v.get<std::size_t>();
    } else if (key == "seed") {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        errors.push_back("seed: expected a nonnegative integer");
      else
        cfg.seed = v.get<std::uint64_t>();
    } else if (key == "level") {
      if (!info->level)
        errors.push_back("level: unknown key (scenario '" + id + "' has no refinement levels)");
      else if (!v.is_number_integer() || v.get<std::int64_t>() < 3 || v.get<std::int64_t>() > kMaxAxisLevel)
        errors.push_back("level: expected an integer in [3, 12]");
      else
        cfg.level = v.get<int>();
    } else if (key == "tolerance") {
      if (!v.is_number() || !(v.get<double>() > 0.0))
        errors.push_back("tolerance: expected a positive number");
      else
        cfg.tolerance = v.get<double>();
    } else if (key == "output_dir") {
      if (!v.is_string())
        errors.push_back("output_dir: expected a string");
      else
        cfg.output_dir = v.get<std::string>();
    } else if (!info->params.contains(key)) {
      errors.push_back(key + ": unknown key for scenario '" + id + "'");
    } else {
      if (auto ok = detail::sanitize(v, info->params.at(key), key, errors)) user_params[key] = std::move(*ok);
    }
  }
  if (info->ky_fan && cfg.paths < kStatisticalFloor)
    errors.push_back("paths: M below statistical floor (" + std::to_string(cfg.paths) + " < 100 for Ky Fan checks)");
  cfg.params = detail::merge(info->params, user_params);
  detail::validate_params(*info, cfg.params, cfg.level, errors);
  if (errors.empty()) res.config = std::move(cfg);
  return res;
}

inline ConfigResult validate_config(const std::filesystem::path& path) {
  ConfigResult res;
  std::ifstream f(path);
  if (!f) {
    res.errors.push_back(path.string() + ": cannot open");
    return res;
  }
  json raw;
  try {
    raw = json::parse(f, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    res.errors.push_back(path.string() + ": " + e.what());
    return res;
  }
  return resolve_config(raw);
}

// ---- builders from resolved params ---------------------------------------------------

inline DriverSpec driver_spec_from(const json& d, std::uint64_t stream = 0) {
  const std::string kind = d.at("kind").get<std::string>();
  const double horizon = d.at("horizon").get<double>();
  const auto n = d.at("grid_size").get<std::size_t>();
  if (kind == "fbm") return DriverSpec::fbm(horizon, n, d.at("hurst").get<double>(), stream);
  if (kind == "compensated_poisson") return DriverSpec::compensated_poisson(horizon, n, d.at("rate").get<double>(), stream);
  if (kind == "deterministic") return DriverSpec::deterministic(horizon, n, d.at("rate").get<double>());
  return DriverSpec::wiener(horizon, n, stream);
}

inline EllipticOperator operator_from(const json& o) {
  const int dim = o.at("dim").get<int>();
  const json& a = o.at("a");
  const json& b = o.at("b");
  if (dim == 1) return EllipticOperator(1, Sym2{a[0][0].get<double>(), 0.0, 1.0}, {b[0].get<double>(), 0.0}, o.at("c").get<double>());
  return EllipticOperator(2, Sym2{a[0][0].get<double>(), a[0][1].get<double>(), a[1][1].get<double>()},
                          {b[0].get<double>(), b[1].get<double>()}, o.at("c").get<double>());
}

inline GridSpec grid_from(const json& g, int dim) {
  return GridSpec::with_spacing(dim, g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("spacing").get<double>());
}

}  // namespace stochint
