#include <gtest/gtest.h>

#include <cmath>

#include "stochint/interchange.hpp"

using namespace stochint;

TEST(Fubini, SeparableIntegrandMatchesAFactoredOracle) {
  // h = cos(x) s factors: lhs = (midpoint sum of cos on [0, 1]) * sum_j s_j dW_j.
  const ProbSpace space(300, 1);
  const Driver d = make_driver(space, DriverSpec::wiener(1.0, 256));
  const SpaceTimeFunction h = [](std::span<const double> x, double s) { return std::cos(x[0]) * s; };
  const IdentityResidual r = fubini_residual(d, h, Box{{0.0, 1.0}}, {8, 3, 0.02, 0});
  const double n = 256.0;
  double mid = 0.0;
  for (int i = 0; i < 256; ++i) mid += std::cos((i + 0.5) / n) / n;
  const Ensemble stoch = integrate_det(d, [](double s) { return s; });
  for (std::size_t p = 0; p < 300; p += 37) {
    EXPECT_NEAR(r.lhs[p], mid * stoch[p], 1e-12);
    EXPECT_NEAR(r.rhs[p], std::sin(1.0) * stoch[p], 1e-9);
  }
  EXPECT_TRUE(r.passed);
  ASSERT_EQ(r.trace.size(), 3u);
  EXPECT_EQ(r.trace.front().level, 6);
  EXPECT_EQ(r.trace.back().level, 8);
}

TEST(Fubini, ThresholdUsesTheSamplingBand) {
  const ProbSpace space(100, 2);
  const Driver d = make_driver(space, DriverSpec::wiener(1.0, 64));
  const SpaceTimeFunction h = [](std::span<const double> x, double s) { return std::exp(-x[0] * x[0]) * (1.0 + s); };
  const IdentityResidual r = fubini_residual(d, h, Box{{0.0, 1.0}}, {6, 3, 0.02, 0});
  EXPECT_DOUBLE_EQ(r.threshold, 0.2);
  EXPECT_TRUE(r.trace_nonincreasing);
  EXPECT_THROW(fubini_residual(d, h, Box{{0.0, 1.0}}, {7, 3, 0.02, 0}), GridError);
}

TEST(Fubini, ImproperGaussianIntegrand) {
  const ProbSpace space(200, 3);
  const Driver d = make_driver(space, DriverSpec::compensated_poisson(1.0, 128, 3.0));
  const SpaceTimeFunction h = [](std::span<const double> x, double s) { return std::exp(-x[0] * x[0] * (1.0 + s)); };
  const IdentityResidual r = fubini_improper_residual(d, h, Exhaustion::to_radius({0.0}, 8.0, 3, 9), {7, 3, 0.02, 0});
  EXPECT_LE(r.residual.value, 0.02);
}

TEST(Product, BilinearFieldIteratesExactly) {
  const ProbSpace space(50, 4);
  const RandomField f = RandomField::deterministic(space, 2, [](std::span<const double> x) { return x[0] * x[1]; });
  const ProductResiduals r = iterated_product_residual(f, Box{{0.0, 1.0}}, Box{{0.0, 1.0}}, {6, 3, 0.02, 0});
  EXPECT_NEAR(r.x_outer.lhs[0], 0.25, 1e-14);
  EXPECT_LT(r.x_outer.residual.value, 1e-14);
  EXPECT_LT(r.s_outer.residual.value, 1e-14);
}

TEST(Triangle, LinearFieldGivesOneSixth) {
  const ProbSpace space(10, 5);
  const RandomField v = RandomField::deterministic(space, 1, [](std::span<const double> x) { return x[0]; });
  const IdentityResidual r = triangle_identity_residual(v, 1.0, {8, 3, 0.02, 0});
  EXPECT_NEAR(r.lhs[0], 1.0 / 6.0, 1e-4);
  EXPECT_NEAR(r.rhs[0], 1.0 / 6.0, 1e-4);
}

TEST(Triangle, WienerPathField) {
  const ProbSpace space(300, 6);
  const Driver d = make_driver(space, DriverSpec::wiener(1.0, 256));
  const IdentityResidual r = triangle_identity_residual(path_field(d), 1.0, {7, 3, 0.02, 0});
  EXPECT_LE(r.residual.value, 0.02);
}

TEST(Parts, AnalyticCasesAreExact) {
  const ProbSpace space(200, 7);
  const Driver d = make_driver(space, DriverSpec::wiener(1.0, 256));
  const IdentityResidual one =
      parts_identity_residual(path_field(d), [](double) { return 1.0; }, [](double) { return 0.0; }, 1.0, {6, 3, 0.02, 0});
  EXPECT_LE(one.residual.value, 1e-6);
  const RandomField unit = RandomField::deterministic(space, 1, [](std::span<const double>) { return 1.0; });
  const IdentityResidual lin =
      parts_identity_residual(unit, [](double u) { return u; }, [](double) { return 1.0; }, 1.0, {6, 3, 0.02, 0});
  EXPECT_NEAR(lin.lhs[0], 1.0, 1e-12);
  EXPECT_NEAR(lin.rhs[0], 1.0, 1e-6);
}

TEST(Parts, ExponentialWeightOnWiener) {
  const ProbSpace space(300, 8);
  const Driver d = make_driver(space, DriverSpec::wiener(1.0, 256));
  auto e = [](double u) { return std::exp(u); };
  const IdentityResidual r = parts_identity_residual(path_field(d), e, e, 1.0, {7, 3, 0.02, 0});
  EXPECT_LE(r.residual.value, 0.02);
}

TEST(Identities, PreconditionsAreEnforced) {
  const ProbSpace space(10, 9);
  const RandomField two = RandomField::deterministic(space, 2, [](std::span<const double>) { return 1.0; });
  const RandomField one = RandomField::deterministic(space, 1, [](std::span<const double>) { return 1.0; });
  EXPECT_THROW(triangle_identity_residual(two, 1.0), DomainError);
  EXPECT_THROW(triangle_identity_residual(one, 0.0), DomainError);
  EXPECT_THROW(parts_identity_residual(one, [](double u) { return u; }, nullptr, 1.0), PreconditionError);
  EXPECT_THROW(iterated_product_residual(one, Box{{0.0, 1.0}}, Box{{0.0, 1.0}}), DomainError);
}
