#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "stochint/error.hpp"
#include "stochint/field.hpp"
#include "stochint/parallel.hpp"
#include "stochint/riemann.hpp"

namespace stochint {

/// Spatial point; only the first `dim` coordinates are used.
using Point = std::array<double, 2>;

struct Sym2 {
  double a11 = 1.0;
  double a12 = 0.0;
  double a22 = 1.0;
};

inline constexpr double kEllipticityFloor = 1e-8;

/// A u = sum a_ij d_i d_j u + sum b_i d_i u + c u with constant coefficients, d in {1, 2}.
class EllipticOperator {
 public:
  EllipticOperator(int dim, Sym2 a, Point b = {0.0, 0.0}, double c = 0.0) : dim_(dim), a_(a), b_(b), c_(c) {
    if (dim != 1 && dim != 2) throw ParameterError("EllipticOperator: dimension must be 1 or 2");
    if (dim == 1) {
      a_.a12 = 0.0;
      a_.a22 = 1.0;
      b_[1] = 0.0;
    }
    for (double v : {a_.a11, a_.a12, a_.a22, b_[0], b_[1], c_})
      if (!std::isfinite(v)) throw ParameterError("EllipticOperator: non-finite coefficient");
    if (dim == 1) {
      lmin_ = lmax_ = a_.a11;
    } else {
      const double mean = 0.5 * (a_.a11 + a_.a22);
      const double rad = std::hypot(0.5 * (a_.a11 - a_.a22), a_.a12);
      lmin_ = mean - rad;
      lmax_ = mean + rad;
    }
    if (!(lmin_ >= kEllipticityFloor)) throw ParameterError("EllipticOperator: a is not positive definite");
    det_ = dim == 1 ? a_.a11 : a_.a11 * a_.a22 - a_.a12 * a_.a12;
  }

  static EllipticOperator heat(int dim = 1, double diffusivity = 1.0) {
    return EllipticOperator(dim, Sym2{diffusivity, 0.0, diffusivity});
  }

  int dim() const { return dim_; }
  const Sym2& a() const { return a_; }
  const Point& b() const { return b_; }
  double c() const { return c_; }
  double lambda_min() const { return lmin_; }
  double lambda_max() const { return lmax_; }
  double det_a() const { return det_; }
  double drift_norm() const { return std::hypot(b_[0], b_[1]); }
  bool self_adjoint() const { return b_[0] == 0.0 && b_[1] == 0.0; }

  // <a^{-1} z, z>
  double inverse_form(const Point& z) const {
    if (dim_ == 1) return z[0] * z[0] / a_.a11;
    return (a_.a22 * z[0] * z[0] - 2.0 * a_.a12 * z[0] * z[1] + a_.a11 * z[1] * z[1]) / det_;
  }

  // a : H
  double trace_with(const std::array<double, 3>& hess) const {
    if (dim_ == 1) return a_.a11 * hess[0];
    return a_.a11 * hess[0] + 2.0 * a_.a12 * hess[1] + a_.a22 * hess[2];
  }

  double drift_dot(const Point& grad) const { return b_[0] * grad[0] + (dim_ == 2 ? b_[1] * grad[1] : 0.0); }

 private:
  int dim_;
  Sym2 a_;
  Point b_;
  double c_;
  double lmin_ = 1.0, lmax_ = 1.0, det_ = 1.0;
};

/// Truncation radius 8 sqrt(2 lambda_max t) + |b| t.
inline double truncation_radius(const EllipticOperator& op, double t) {
  return 8.0 * std::sqrt(2.0 * op.lambda_max() * t) + op.drift_norm() * t;
}

/// Fundamental solution e^{ct} (4 pi t)^{-d/2} (det a)^{-1/2} exp(-<a^{-1} z, z>/(4t)), z = x + bt - y.
inline double kernel(const EllipticOperator& op, const Point& x, const Point& y, double t) {
  if (!(t > 0.0)) throw DomainError("kernel: t must be positive");
  const Point z{x[0] + op.b()[0] * t - y[0], op.dim() == 2 ? x[1] + op.b()[1] * t - y[1] : 0.0};
  const double norm = std::exp(op.c() * t) * std::pow(4.0 * std::numbers::pi * t, -0.5 * op.dim()) / std::sqrt(op.det_a());
  return norm * std::exp(-op.inverse_form(z) / (4.0 * t));
}

/// q(z) e^{-alpha |z|^2} with z = x - center and q(z) = q0 + <q1, z> + <Q z, z>.
///
/// alpha = 0 with a constant q gives the constant function (semigroup data,
/// not a test function).
class TestFunction {
 public:
  TestFunction(int dim, Point center, double alpha, double q0, Point q1 = {0.0, 0.0}, Sym2 q2 = {0.0, 0.0, 0.0})
      : dim_(dim), center_(center), alpha_(alpha), q0_(q0), q1_(q1), q2_(q2) {
    if (dim != 1 && dim != 2) throw ParameterError("TestFunction: dimension must be 1 or 2");
    if (!(alpha >= 0.0)) throw ParameterError("TestFunction: alpha must be nonnegative");
    if (dim == 1) {
      center_[1] = 0.0;
      q1_[1] = 0.0;
      q2_.a12 = q2_.a22 = 0.0;
    }
  }

  static TestFunction gaussian(int dim, Point center, double alpha, double amplitude = 1.0) {
    if (!(alpha > 0.0)) throw ParameterError("TestFunction: alpha must be positive");
    return TestFunction(dim, center, alpha, amplitude);
  }
  static TestFunction constant(int dim, double value) { return TestFunction(dim, {0.0, 0.0}, 0.0, value); }

  int dim() const { return dim_; }
  const Point& center() const { return center_; }
  double alpha() const { return alpha_; }
  bool rapidly_decreasing() const { return alpha_ > 0.0; }

  double value(const Point& x) const {
    const Point z = offset(x);
    return q(z) * envelope(z);
  }

  Point gradient(const Point& x) const {
    const Point z = offset(x);
    const double e = envelope(z), qz = q(z);
    const Point dq = grad_q(z);
    return {e * (dq[0] - 2.0 * alpha_ * z[0] * qz), dim_ == 2 ? e * (dq[1] - 2.0 * alpha_ * z[1] * qz) : 0.0};
  }

  // (d11, d12, d22)
  std::array<double, 3> hessian(const Point& x) const {
    const Point z = offset(x);
    const double e = envelope(z), qz = q(z);
    const Point dq = grad_q(z);
    const double a2 = 2.0 * alpha_;
    auto entry = [&](int i, int j, double qij) {
      const double delta = i == j ? 1.0 : 0.0;
      return e * (qij - a2 * (z[i] * dq[j] + z[j] * dq[i]) + qz * (a2 * a2 * z[i] * z[j] - a2 * delta));
    };
    return {entry(0, 0, 2.0 * q2_.a11), dim_ == 2 ? entry(0, 1, 2.0 * q2_.a12) : 0.0,
            dim_ == 2 ? entry(1, 1, 2.0 * q2_.a22) : 0.0};
  }

  /// Half-width beyond which the envelope is below rel times its maximum
  /// (with a polynomial allowance for q).
  double support_radius(double rel = 1e-10) const {
    if (!rapidly_decreasing()) throw DomainError("TestFunction: constant has no decay radius");
    return std::sqrt(-std::log(rel) / alpha_) + 2.0 / std::sqrt(alpha_);
  }

 private:
  Point offset(const Point& x) const { return {x[0] - center_[0], dim_ == 2 ? x[1] - center_[1] : 0.0}; }
  double envelope(const Point& z) const { return std::exp(-alpha_ * (z[0] * z[0] + z[1] * z[1])); }
  double q(const Point& z) const {
    return q0_ + q1_[0] * z[0] + q1_[1] * z[1] + q2_.a11 * z[0] * z[0] + 2.0 * q2_.a12 * z[0] * z[1] +
           q2_.a22 * z[1] * z[1];
  }
  Point grad_q(const Point& z) const {
    return {q1_[0] + 2.0 * (q2_.a11 * z[0] + q2_.a12 * z[1]), q1_[1] + 2.0 * (q2_.a12 * z[0] + q2_.a22 * z[1])};
  }

  int dim_;
  Point center_;
  double alpha_;
  double q0_;
  Point q1_;
  Sym2 q2_;
};

/// A phi from the analytic partials.
inline double operator_apply(const EllipticOperator& op, const TestFunction& phi, const Point& x) {
  return op.trace_with(phi.hessian(x)) + op.drift_dot(phi.gradient(x)) + op.c() * phi.value(x);
}

/// A* phi = a : H phi - b . grad phi + c phi (constant coefficients).
inline double adjoint_apply(const EllipticOperator& op, const TestFunction& phi, const Point& x) {
  return op.trace_with(phi.hessian(x)) - op.drift_dot(phi.gradient(x)) + op.c() * phi.value(x);
}

// ---- grids ---------------------------------------------------------------------

/// Uniform node grid with endpoints included; axis 0 varies slowest.
struct GridSpec {
  int dim = 1;
  std::array<Interval, 2> axes{};
  std::array<std::size_t, 2> counts{1, 1};

  static GridSpec line(double lo, double hi, std::size_t n) {
    if (n < 2 || !(lo < hi)) throw GridError("GridSpec: need lo < hi and at least 2 nodes");
    return {1, {Interval{lo, hi}, Interval{0.0, 0.0}}, {n, 1}};
  }
  static GridSpec square(double lo, double hi, std::size_t n) {
    if (n < 2 || !(lo < hi)) throw GridError("GridSpec: need lo < hi and at least 2 nodes");
    return {2, {Interval{lo, hi}, Interval{lo, hi}}, {n, n}};
  }
  /// Grid on [lo, hi] with spacing h (hi - lo must be a multiple of h up to round-off).
  static GridSpec with_spacing(int dim, double lo, double hi, double h) {
    const double cells = (hi - lo) / h;
    const auto n = static_cast<std::size_t>(std::llround(cells)) + 1;
    if (std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, cells))
      throw GridError("GridSpec: extent is not a multiple of the spacing");
    return dim == 1 ? line(lo, hi, n) : square(lo, hi, n);
  }

  std::size_t size() const { return counts[0] * (dim == 2 ? counts[1] : 1); }
  double spacing(int axis) const {
    return axes[axis].length() / static_cast<double>(counts[axis] - 1);
  }
  Point node(std::size_t index) const {
    if (dim == 1) return {axes[0].lo + static_cast<double>(index) * spacing(0), 0.0};
    const std::size_t i = index / counts[1], j = index % counts[1];
    return {axes[0].lo + static_cast<double>(i) * spacing(0), axes[1].lo + static_cast<double>(j) * spacing(1)};
  }
  Box box() const {
    return dim == 1 ? Box{axes[0]} : Box{axes[0], axes[1]};
  }
  bool covers(const Point& x, double radius) const {
    for (int i = 0; i < dim; ++i)
      if (x[i] - radius < axes[i].lo - 1e-12 || x[i] + radius > axes[i].hi + 1e-12) return false;
    return true;
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.dim == b.dim && a.counts == b.counts && a.axes[0].lo == b.axes[0].lo && a.axes[0].hi == b.axes[0].hi &&
           a.axes[1].lo == b.axes[1].lo && a.axes[1].hi == b.axes[1].hi;
  }
};

struct GridFunction {
  GridSpec grid;
  std::vector<double> values;

  static GridFunction sample(const GridSpec& grid, const std::function<double(const Point&)>& g) {
    GridFunction out{grid, std::vector<double>(grid.size())};
    parallel_for(grid.size(), [&](std::size_t k) { out.values[k] = g(grid.node(k)); });
    return out;
  }

  double sup_norm() const {
    double s = 0.0;
    for (double v : values) s = std::max(s, std::abs(v));
    return s;
  }

  /// Catmull-Rom interpolation (tensor product in 2D); linear next to the boundary.
  double interpolate(const Point& x) const {
    if (grid.dim == 1) return interp_axis(0, x[0], [&](std::size_t i) { return values[i]; });
    return interp_axis(0, x[0], [&](std::size_t i) {
      return interp_axis(1, x[1], [&](std::size_t j) { return values[i * grid.counts[1] + j]; });
    });
  }

 private:
  template <class At>
  double interp_axis(int axis, double x, At&& at) const {
    const std::size_t n = grid.counts[axis];
    const double pos = std::clamp((x - grid.axes[axis].lo) / grid.spacing(axis), 0.0, static_cast<double>(n - 1));
    const std::size_t i = std::min(static_cast<std::size_t>(pos), n - 2);
    const double u = pos - static_cast<double>(i);
    const double p1 = at(i), p2 = at(i + 1);
    if (i == 0 || i + 2 >= n) return p1 + u * (p2 - p1);
    const double p0 = at(i - 1), p3 = at(i + 2);
    return p1 + 0.5 * u * (p2 - p0 + u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + u * (3.0 * (p1 - p2) + p3 - p0)));
  }
};

// ---- semigroup -----------------------------------------------------------------

struct QuadratureSpec {
  double max_spacing = 0.1;   // cap on the y-lattice spacing (resolves the data itself)
  double sigma_fraction = 0.5;  // spacing <= fraction * sqrt(2 lambda_min t)
};

namespace detail {

inline double lattice_spacing(const EllipticOperator& op, double t, const QuadratureSpec& q) {
  return std::min(q.max_spacing, q.sigma_fraction * std::sqrt(2.0 * op.lambda_min() * t));
}

// Trapezoid sum of kernel(x, y, t) g(y) over the global lattice y = k h, |y - x|_inf <= R.
template <class G>
double convolve_at(const EllipticOperator& op, const Point& x, double t, double h, double radius, G&& g) {
  const int d = op.dim();
  const long lo0 = static_cast<long>(std::ceil((x[0] - radius) / h));
  const long hi0 = static_cast<long>(std::floor((x[0] + radius) / h));
  const long lo1 = d == 2 ? static_cast<long>(std::ceil((x[1] - radius) / h)) : 0;
  const long hi1 = d == 2 ? static_cast<long>(std::floor((x[1] + radius) / h)) : 0;
  double s = 0.0;
  for (long i = lo0; i <= hi0; ++i) {
    for (long j = lo1; j <= hi1; ++j) {
      const Point y{static_cast<double>(i) * h, d == 2 ? static_cast<double>(j) * h : 0.0};
      s += kernel(op, x, y, t) * g(y);
    }
  }
  return s * (d == 2 ? h * h : h);
}

}  // namespace detail

/// int p(x, y, t) dy by the semigroup quadrature (equals e^{ct} analytically).
inline double kernel_mass(const EllipticOperator& op, const Point& x, double t, const QuadratureSpec& q = {}) {
  const double h = detail::lattice_spacing(op, t, q);
  return detail::convolve_at(op, x, t, h, truncation_radius(op, t), [](const Point&) { return 1.0; });
}

/// S(t) g on `out` for a function g defined on all of R^d.
inline GridFunction apply_semigroup(const EllipticOperator& op, const std::function<double(const Point&)>& g,
                                    double t, const GridSpec& out, const QuadratureSpec& q = {}) {
  if (out.dim != op.dim()) throw DomainError("apply_semigroup: grid and operator dimensions differ");
  if (t < 0.0) throw DomainError("apply_semigroup: t must be nonnegative");
  if (t == 0.0) return GridFunction::sample(out, g);
  const double h = detail::lattice_spacing(op, t, q);
  const double radius = truncation_radius(op, t);
  GridFunction res{out, std::vector<double>(out.size())};
  parallel_for(out.size(), [&](std::size_t k) { res.values[k] = detail::convolve_at(op, out.node(k), t, h, radius, g); });
  return res;
}

inline GridFunction apply_semigroup(const EllipticOperator& op, const TestFunction& g, double t, const GridSpec& out,
                                    const QuadratureSpec& q = {}) {
  return apply_semigroup(op, [&g](const Point& y) { return g.value(y); }, t, out, q);
}

/// S(t) g for grid data: g is interpolated and must cover every output node's truncation box.
inline GridFunction apply_semigroup(const EllipticOperator& op, const GridFunction& g, double t, const GridSpec& out,
                                    const QuadratureSpec& q = {}) {
  if (g.grid.dim != op.dim()) throw DomainError("apply_semigroup: grid and operator dimensions differ");
  const double radius = t > 0.0 ? truncation_radius(op, t) : 0.0;
  for (std::size_t k = 0; k < out.size(); ++k)
    if (!g.grid.covers(out.node(k), radius)) throw CoverageError("apply_semigroup: input grid does not cover R(t)");
  if (t == 0.0 && g.grid == out) return g;
  return apply_semigroup(op, [&g](const Point& y) { return g.interpolate(y); }, t, out, q);
}

/// Central-difference A u at the interior nodes (boundary nodes are left at 0).
inline GridFunction apply_operator_fd(const EllipticOperator& op, const GridFunction& u) {
  const GridSpec& gs = u.grid;
  GridFunction out{gs, std::vector<double>(gs.size(), 0.0)};
  const auto& a = op.a();
  if (gs.dim == 1) {
    const double h = gs.spacing(0);
    for (std::size_t i = 1; i + 1 < gs.counts[0]; ++i) {
      const double uxx = (u.values[i + 1] - 2.0 * u.values[i] + u.values[i - 1]) / (h * h);
      const double ux = (u.values[i + 1] - u.values[i - 1]) / (2.0 * h);
      out.values[i] = a.a11 * uxx + op.b()[0] * ux + op.c() * u.values[i];
    }
    return out;
  }
  const std::size_t n0 = gs.counts[0], n1 = gs.counts[1];
  const double hx = gs.spacing(0), hy = gs.spacing(1);
  auto at = [&](std::size_t i, std::size_t j) { return u.values[i * n1 + j]; };
  for (std::size_t i = 1; i + 1 < n0; ++i)
    for (std::size_t j = 1; j + 1 < n1; ++j) {
      const double uxx = (at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j)) / (hx * hx);
      const double uyy = (at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1)) / (hy * hy);
      const double uxy = (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4.0 * hx * hy);
      const double ux = (at(i + 1, j) - at(i - 1, j)) / (2.0 * hx);
      const double uy = (at(i, j + 1) - at(i, j - 1)) / (2.0 * hy);
      out.values[i * n1 + j] =
          a.a11 * uxx + 2.0 * a.a12 * uxy + a.a22 * uyy + op.b()[0] * ux + op.b()[1] * uy + op.c() * at(i, j);
    }
  return out;
}

/// sup over `grid` of |S(t)g - g - A int_0^t S(s) g ds|, with A g in closed form
/// (A commutes with S(s)) and the s-integral by composite Simpson.
inline double semigroup_identity_residual(const EllipticOperator& op, const TestFunction& g, double t,
                                          const GridSpec& grid, std::size_t panels = 64, const QuadratureSpec& q = {}) {
  if (panels < 64 || panels % 2) throw GridError("semigroup identity: at least 64 panels, even");
  if (t == 0.0) return 0.0;
  const GridFunction st = apply_semigroup(op, g, t, grid, q);
  const GridFunction g0 = GridFunction::sample(grid, [&](const Point& x) { return g.value(x); });
  auto ag = [&](const Point& y) { return operator_apply(op, g, y); };
  std::vector<double> integral(grid.size(), 0.0);
  const double ds = t / static_cast<double>(panels);
  for (std::size_t i = 0; i <= panels; ++i) {
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const GridFunction si = apply_semigroup(op, ag, static_cast<double>(i) * ds, grid, q);
    for (std::size_t k = 0; k < grid.size(); ++k) integral[k] += w * ds / 3.0 * si.values[k];
  }
  double sup = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    sup = std::max(sup, std::abs(st.values[k] - g0.values[k] - integral[k]));
  return sup;
}

/// Grid-data version: A is applied by central differences to the Simpson
/// s-integral; the sup runs over nodes at least two cells from the boundary.
inline double semigroup_identity_residual(const EllipticOperator& op, const GridFunction& g, double t,
                                          const GridSpec& grid, std::size_t panels = 64, const QuadratureSpec& q = {}) {
  if (panels < 64 || panels % 2) throw GridError("semigroup identity: at least 64 panels, even");
  if (t == 0.0) return 0.0;
  GridFunction integral{grid, std::vector<double>(grid.size(), 0.0)};
  const double ds = t / static_cast<double>(panels);
  for (std::size_t i = 0; i <= panels; ++i) {
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const GridFunction si = apply_semigroup(op, g, static_cast<double>(i) * ds, grid, q);
    for (std::size_t k = 0; k < grid.size(); ++k) integral.values[k] += w * ds / 3.0 * si.values[k];
  }
  const GridFunction a_int = apply_operator_fd(op, integral);
  const GridFunction st = apply_semigroup(op, g, t, grid, q);
  const GridFunction g0 = apply_semigroup(op, g, 0.0, grid, q);
  double sup = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point x = grid.node(k);
    if (!grid.covers(x, 2.0 * std::max(grid.spacing(0), grid.dim == 2 ? grid.spacing(1) : 0.0))) continue;
    sup = std::max(sup, std::abs(st.values[k] - g0.values[k] - a_int.values[k]));
  }
  return sup;
}

/// psi_{t,s} = S(t - s) phi and its s-derivative -S(t - s) A phi.
struct EvolvedTestFunction {
  GridFunction psi;
  GridFunction dpsi_ds;
};

inline EvolvedTestFunction evolved_test_function(const EllipticOperator& op, const TestFunction& phi, double t,
                                                 double s, const GridSpec& grid, const QuadratureSpec& q = {}) {
  if (!(s < t)) throw DomainError("evolved_test_function: s must be below t");
  EvolvedTestFunction out{apply_semigroup(op, phi, t - s, grid, q),
                          apply_semigroup(op, [&](const Point& y) { return -operator_apply(op, phi, y); }, t - s, grid, q)};
  return out;
}

// ---- kernel bound ----------------------------------------------------------------

struct KernelBound {
  double c1;     // smallest C1 with p <= C1 t^{-d/2} on the fit sample
  double c2;     // largest C2 given C1
  bool holds;    // bound verified on a held-out sample
  std::size_t fit_points;
};

/// Fits |p(x, y, t)| <= C1 t^{-d/2} exp(-C2 |x - y|^2 / t) over offsets x - y and
/// geometric t samples in t_range, then checks the pair on a held-out sample.
inline KernelBound kernel_bound_check(const EllipticOperator& op, std::span<const Point> offsets, Interval t_range,
                                      std::size_t t_samples = 16) {
  if (!(t_range.lo > 0.0) || !(t_range.hi >= t_range.lo)) throw DomainError("kernel_bound_check: t-range must lie in (0, T]");
  if (offsets.empty() || t_samples < 2) throw DomainError("kernel_bound_check: empty sample");
  const double half_d = 0.5 * op.dim();
  auto t_at = [&](double u) { return t_range.lo * std::pow(t_range.hi / t_range.lo, u); };
  auto sq = [](const Point& z) { return z[0] * z[0] + z[1] * z[1]; };
  const Point origin{0.0, 0.0};

  double c1 = 0.0;
  for (std::size_t k = 0; k < t_samples; ++k) {
    const double t = t_at(static_cast<double>(k) / static_cast<double>(t_samples - 1));
    for (const auto& z : offsets) c1 = std::max(c1, kernel(op, z, origin, t) * std::pow(t, half_d));
  }
  double c2 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < t_samples; ++k) {
    const double t = t_at(static_cast<double>(k) / static_cast<double>(t_samples - 1));
    for (const auto& z : offsets) {
      const double r2 = sq(z);
      if (r2 == 0.0) continue;
      const double p = kernel(op, z, origin, t);
      if (p <= 0.0) continue;
      c2 = std::min(c2, t / r2 * std::log(c1 * std::pow(t, -half_d) / p));
    }
  }
  if (!std::isfinite(c2)) c2 = 0.0;

  bool holds = true;
  for (std::size_t k = 0; k + 1 < t_samples; ++k) {
    const double t = t_at((static_cast<double>(k) + 0.5) / static_cast<double>(t_samples - 1));
    for (const auto& z : offsets) {
      const Point zh{0.73 * z[0], 0.73 * z[1]};
      const double bound = c1 * std::pow(t, -half_d) * std::exp(-c2 * sq(zh) / t);
      if (kernel(op, zh, origin, t) > bound * (1.0 + 1e-9)) holds = false;
    }
  }
  return {c1, c2, holds, offsets.size() * t_samples};
}

}  // namespace stochint
