#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "stochint/parabolic.hpp"
#include "stochint/riemann.hpp"

using namespace stochint;

namespace {

// Heat semigroup (a = 1) on exp(-alpha x^2) in one dimension.
double heat_gauss(double alpha, double x, double t) {
  const double s = 1.0 + 4.0 * alpha * t;
  return std::exp(-alpha * x * x / s) / std::sqrt(s);
}

}  // namespace

TEST(Kernel, OneDimensionalHeatFormula) {
  const EllipticOperator heat = EllipticOperator::heat();
  for (double t : {0.01, 0.5, 2.0})
    for (double x : {-1.0, 0.0, 0.3, 2.5}) {
      const double expected = std::exp(-(x - 0.2) * (x - 0.2) / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
      EXPECT_NEAR(kernel(heat, {x, 0.0}, {0.2, 0.0}, t), expected, 1e-15 * std::max(1.0, expected));
    }
  EXPECT_THROW(kernel(heat, {0.0, 0.0}, {0.0, 0.0}, 0.0), DomainError);
}

TEST(Kernel, MassIsExpCtForAnisotropicOperators) {
  const EllipticOperator op(2, Sym2{1.0, 0.3, 0.6}, {0.4, -0.2}, -0.3);
  for (double t : {0.1, 0.5, 1.0}) {
    EXPECT_NEAR(kernel_mass(op, {0.2, -0.1}, t), std::exp(-0.3 * t), 1e-8) << t;
    // Independent Simpson quadrature over a wide box.
    const double simpson = classical_integral(
        [&](std::span<const double> y) { return kernel(op, {0.2, -0.1}, {y[0], y[1]}, t); }, Box::cube(2, -8.0, 8.0), 8);
    EXPECT_NEAR(simpson, std::exp(-0.3 * t), 1e-7) << t;
  }
}

TEST(Semigroup, GaussianDataClosedForm) {
  const EllipticOperator heat = EllipticOperator::heat();
  const GridSpec grid = GridSpec::with_spacing(1, -3.0, 3.0, 0.25);
  for (double t : {0.05, 0.5}) {
    const GridFunction u = apply_semigroup(heat, TestFunction::gaussian(1, {0.0, 0.0}, 1.5), t, grid);
    for (std::size_t k = 0; k < grid.size(); ++k)
      ASSERT_NEAR(u.values[k], heat_gauss(1.5, grid.node(k)[0], t), 1e-9) << t;
  }
}

TEST(Semigroup, DriftShiftsAndPotentialScales) {
  // p(x, y, t) depends on x + b t - y and carries e^{ct}.
  const EllipticOperator op(1, Sym2{1.0, 0.0, 1.0}, {0.7, 0.0}, -0.4);
  const GridSpec grid = GridSpec::with_spacing(1, -2.0, 2.0, 0.5);
  const double t = 0.3;
  const GridFunction u = apply_semigroup(op, TestFunction::gaussian(1, {0.0, 0.0}, 1.0), t, grid);
  for (std::size_t k = 0; k < grid.size(); ++k)
    EXPECT_NEAR(u.values[k], std::exp(-0.4 * t) * heat_gauss(1.0, grid.node(k)[0] + 0.7 * t, t), 1e-9);
}

TEST(Semigroup, IdentityResidualForGaussianAndConstantData) {
  const EllipticOperator heat = EllipticOperator::heat();
  const GridSpec grid = GridSpec::with_spacing(1, -4.0, 4.0, 0.05);
  EXPECT_LE(semigroup_identity_residual(heat, TestFunction::gaussian(1, {0.0, 0.0}, 1.0), 0.5, grid), 1e-3);
  EXPECT_LE(semigroup_identity_residual(heat, TestFunction::constant(1, 2.0), 0.5, grid), 1e-8);
  EXPECT_EQ(semigroup_identity_residual(heat, TestFunction::constant(1, 2.0), 0.0, grid), 0.0);
  EXPECT_THROW(semigroup_identity_residual(heat, TestFunction::constant(1, 2.0), 0.5, grid, 10), GridError);
}

TEST(Semigroup, GridDataIdentity) {
  const EllipticOperator heat = EllipticOperator::heat();
  const GridSpec data = GridSpec::with_spacing(1, -11.0, 11.0, 0.02);
  const GridSpec grid = GridSpec::with_spacing(1, -2.0, 2.0, 0.05);
  const GridFunction g = GridFunction::sample(data, [](const Point& x) { return std::exp(-x[0] * x[0]); });
  EXPECT_LE(semigroup_identity_residual(heat, g, 0.5, grid), 1e-3);
}

TEST(TestFunction, OperatorApplyMatchesFiniteDifferences) {
  const EllipticOperator op(2, Sym2{1.0, 0.3, 0.6}, {0.4, -0.2}, -0.3);
  const TestFunction phi(2, {0.1, -0.2}, 0.8, 1.0, {0.5, -0.3}, Sym2{1.0, 0.2, 0.4});
  const double h = 1e-3;
  auto f = [&](double x, double y) { return phi.value({x, y}); };
  for (const Point& p : {Point{0.0, 0.0}, Point{0.7, -0.4}, Point{-1.1, 0.9}}) {
    const double x = p[0], y = p[1];
    const double fxx = (f(x + h, y) - 2 * f(x, y) + f(x - h, y)) / (h * h);
    const double fyy = (f(x, y + h) - 2 * f(x, y) + f(x, y - h)) / (h * h);
    const double fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h);
    const double fx = (f(x + h, y) - f(x - h, y)) / (2 * h);
    const double fy = (f(x, y + h) - f(x, y - h)) / (2 * h);
    const double expected = 1.0 * fxx + 2 * 0.3 * fxy + 0.6 * fyy + 0.4 * fx - 0.2 * fy - 0.3 * f(x, y);
    EXPECT_NEAR(operator_apply(op, phi, p), expected, 1e-5);
    const double adj = 1.0 * fxx + 2 * 0.3 * fxy + 0.6 * fyy - 0.4 * fx + 0.2 * fy - 0.3 * f(x, y);
    EXPECT_NEAR(adjoint_apply(op, phi, p), adj, 1e-5);
  }
}

TEST(KernelBound, HeatKernelConstants) {
  const EllipticOperator heat = EllipticOperator::heat();
  std::vector<Point> offsets;
  for (int i = -32; i <= 32; ++i) offsets.push_back({0.125 * i, 0.0});
  const KernelBound kb = kernel_bound_check(heat, offsets, {0.05, 1.0});
  EXPECT_TRUE(kb.holds);
  EXPECT_NEAR(kb.c1 / (1.0 / std::sqrt(4.0 * std::numbers::pi)), 1.0, 0.01);
  EXPECT_NEAR(kb.c2 / 0.25, 1.0, 0.01);
  EXPECT_THROW(kernel_bound_check(heat, offsets, {0.0, 1.0}), DomainError);
}

TEST(EllipticOperator, RejectsDegenerateCoefficients) {
  EXPECT_THROW(EllipticOperator(2, Sym2{1.0, 1.0, 1.0}), ParameterError);
  EXPECT_THROW(EllipticOperator(1, Sym2{-1.0, 0.0, 1.0}), ParameterError);
  EXPECT_THROW(EllipticOperator(3, Sym2{}), ParameterError);
  EXPECT_THROW(EllipticOperator(1, Sym2{}, {NAN, 0.0}), ParameterError);
  const EllipticOperator op(2, Sym2{2.0, 0.0, 0.5});
  EXPECT_DOUBLE_EQ(op.lambda_min(), 0.5);
  EXPECT_DOUBLE_EQ(op.lambda_max(), 2.0);
  EXPECT_DOUBLE_EQ(op.det_a(), 1.0);
}
