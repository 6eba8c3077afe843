#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "stochint/drivers.hpp"
#include "stochint/field.hpp"
#include "stochint/interchange.hpp"
#include "stochint/parabolic.hpp"
#include "stochint/spde.hpp"

// Named building blocks selectable from scenario configs.
namespace stochint::catalog {

template <class T>
struct Entry {
  const char* name;
  const char* formula;
  T make;
};

inline double sq_norm(std::span<const double> x) {
  double r = 0.0;
  for (double v : x) r += v * v;
  return r;
}

inline double sq_norm(const Point& x) { return x[0] * x[0] + x[1] * x[1]; }

// ---- deterministic integrands h(x, s) ---------------------------------------------

struct Integrand {
  SpaceTimeFunction h;
  bool decays_in_x;  // usable over all of R^d
};

inline const std::vector<Entry<Integrand>>& integrands() {
  static const std::vector<Entry<Integrand>> list{
      {"gauss_x_linear_s", "exp(-|x|^2) (1 + s)",
       {[](std::span<const double> x, double s) { return std::exp(-sq_norm(x)) * (1.0 + s); }, true}},
      {"gauss_xs", "exp(-|x|^2 (1 + s))",
       {[](std::span<const double> x, double s) { return std::exp(-sq_norm(x) * (1.0 + s)); }, true}},
      {"separable_xs", "cos(x_1) s", {[](std::span<const double> x, double s) { return std::cos(x[0]) * s; }, false}},
      {"exp_decay_xs", "exp(-x_1 s)", {[](std::span<const double> x, double s) { return std::exp(-x[0] * s); }, false}},
  };
  return list;
}

// ---- random fields on B x S for the product identity -------------------------------

using ProductFieldMaker = std::function<RandomField(const ProbSpace&, const Driver&)>;

inline const std::vector<Entry<ProductFieldMaker>>& product_fields() {
  static const std::vector<Entry<ProductFieldMaker>> list{
      {"ws_exp_x", "W(s) exp(-x)",
       [](const ProbSpace&, const Driver& d) {
         const RandomField w = path_field(d);
         return RandomField(d.paths(), d.space_id(), 2, [w](std::span<const double> xs, std::span<double> out) {
           const double s = xs[1];
           w.evaluate_into(std::span<const double>(&s, 1), out);
           const double e = std::exp(-xs[0]);
           for (double& v : out) v *= e;
         });
       }},
      {"xs", "x s",
       [](const ProbSpace& space, const Driver&) {
         return RandomField::deterministic(space, 2, [](std::span<const double> xs) { return xs[0] * xs[1]; });
       }},
      {"constant_eta", "eta ~ N(0, 1)",
       [](const ProbSpace& space, const Driver&) {
         return RandomField::separable(space.generate(stream_tag::user + 1, [](Stream& s) { return s.normal(); }), 2);
       }},
  };
  return list;
}

// ---- one-dimensional random fields xi(v) on [0, T] ---------------------------------

using LineFieldMaker = std::function<RandomField(const ProbSpace&, const Driver&)>;

inline const std::vector<Entry<LineFieldMaker>>& line_fields() {
  static const std::vector<Entry<LineFieldMaker>> list{
      {"w", "driver path v -> mu([0, v])", [](const ProbSpace&, const Driver& d) { return path_field(d); }},
      {"linear", "v",
       [](const ProbSpace& space, const Driver&) {
         return RandomField::deterministic(space, 1, [](std::span<const double> v) { return v[0]; });
       }},
      {"one", "1",
       [](const ProbSpace& space, const Driver&) {
         return RandomField::deterministic(space, 1, [](std::span<const double>) { return 1.0; });
       }},
  };
  return list;
}

// ---- C^1 weights g for integration by parts ----------------------------------------

struct Weight {
  std::function<double(double)> g;
  std::function<double(double)> dg;
};

inline const std::vector<Entry<Weight>>& weights() {
  static const std::vector<Entry<Weight>> list{
      {"exp", "exp(u)", {[](double u) { return std::exp(u); }, [](double u) { return std::exp(u); }}},
      {"linear", "u", {[](double u) { return u; }, [](double) { return 1.0; }}},
      {"one", "1", {[](double) { return 1.0; }, [](double) { return 0.0; }}},
  };
  return list;
}

// ---- spatial profiles for forcings and initial data --------------------------------

inline const std::vector<Entry<SpatialFunction>>& forcings() {
  static const std::vector<Entry<SpatialFunction>> list{
      {"zero", "0", [](const Point&) { return 0.0; }},
      {"one", "1", [](const Point&) { return 1.0; }},
      {"gauss_x", "exp(-|x|^2)", [](const Point& x) { return std::exp(-sq_norm(x)); }},
  };
  return list;
}

using InitialMaker = std::function<std::vector<InitialTerm>(const ProbSpace&)>;

inline const std::vector<Entry<InitialMaker>>& initial_fields() {
  static const std::vector<Entry<InitialMaker>> list{
      {"zero", "0",
       [](const ProbSpace& space) {
         return std::vector<InitialTerm>{{space.zeros(), [](const Point&) { return 0.0; }}};
       }},
      {"one", "1",
       [](const ProbSpace& space) {
         return std::vector<InitialTerm>{{space.constant(1.0), [](const Point&) { return 1.0; }}};
       }},
      {"gauss", "exp(-|x|^2)",
       [](const ProbSpace& space) {
         return std::vector<InitialTerm>{{space.constant(1.0), [](const Point& x) { return std::exp(-sq_norm(x)); }}};
       }},
      {"gauss_random_amp", "(1 + Z/4) exp(-|x|^2), Z ~ N(0, 1)",
       [](const ProbSpace& space) {
         Ensemble amp = space.generate(stream_tag::initial_field, [](Stream& s) { return 1.0 + 0.25 * s.normal(); });
         return std::vector<InitialTerm>{{std::move(amp), [](const Point& x) { return std::exp(-sq_norm(x)); }}};
       }},
  };
  return list;
}

// ---- test functions ----------------------------------------------------------------

using TestFunctionMaker = std::function<TestFunction(int dim)>;

inline const std::vector<Entry<TestFunctionMaker>>& test_functions() {
  static const std::vector<Entry<TestFunctionMaker>> list{
      {"gauss", "exp(-|x|^2)", [](int dim) { return TestFunction::gaussian(dim, {0.0, 0.0}, 1.0); }},
      {"gauss_quad", "(1 + x_1/2 + |x|^2) exp(-|x|^2)",
       [](int dim) { return TestFunction(dim, {0.0, 0.0}, 1.0, 1.0, {0.5, 0.0}, Sym2{1.0, 0.0, 1.0}); }},
  };
  return list;
}

template <class T>
const Entry<T>* find(const std::vector<Entry<T>>& list, const std::string& name) {
  for (const auto& e : list)
    if (name == e.name) return &e;
  return nullptr;
}

template <class T>
const T& lookup(const std::vector<Entry<T>>& list, const std::string& name, const char* what) {
  if (const auto* e = find(list, name)) return e->make;
  throw ParameterError(std::string("unknown ") + what + " '" + name + "'");
}

template <class T>
std::vector<std::string> names(const std::vector<Entry<T>>& list) {
  std::vector<std::string> out;
  for (const auto& e : list) out.emplace_back(e.name);
  return out;
}

}  // namespace stochint::catalog
