#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "stochint/riemann.hpp"

using namespace stochint;

TEST(RiemannSum, CenterRuleErrorOnXSquared) {
  // Midpoint rule on x^2 over [0, 1] with n cells: 1/3 - 1/(12 n^2).
  const ProbSpace space(4, 1);
  const RandomField f = RandomField::deterministic(space, 1, [](std::span<const double> x) { return x[0] * x[0]; });
  for (int level : {2, 5, 9}) {
    const double n = std::ldexp(1.0, level);
    EXPECT_NEAR(riemann_sum(f, dyadic_partition(Box{{0.0, 1.0}}, level))[2], 1.0 / 3.0 - 1.0 / (12.0 * n * n), 1e-15);
  }
}

TEST(RiemannIntegral, DeterministicLinearIsExact) {
  const ProbSpace space(4, 1);
  const RandomField f = RandomField::deterministic(space, 1, [](std::span<const double> x) { return x[0]; });
  const IntegralResult r = riemann_integral(f, Box{{0.0, 1.0}}, {6, 0.02, {}, 0});
  EXPECT_NEAR(r.value[0], 0.5, 1e-15);
  EXPECT_TRUE(r.report.accepted);
  ASSERT_EQ(r.report.cauchy.size(), 2u);
  EXPECT_EQ(r.report.cauchy.back().level, 6);
}

TEST(RiemannIntegral, ProductOfLinearsOnARectangle) {
  const ProbSpace space(4, 1);
  const RandomField f =
      RandomField::deterministic(space, 2, [](std::span<const double> x) { return x[0] * x[1]; });
  // int_0^1 x dx int_0^2 y dy = 1
  EXPECT_NEAR(riemann_integral(f, Box{{0.0, 1.0}, {0.0, 2.0}}, {5, 0.02, {}, 0}).value[1], 1.0, 1e-13);
}

TEST(RiemannIntegral, ConstantRandomVariableTimesVolume) {
  const ProbSpace space(500, 2);
  const Ensemble eta = space.generate(1, [](Stream& s) { return s.normal(); });
  const IntegralResult r = riemann_integral(RandomField::separable(eta, 2), Box{{0.0, 1.0}, {0.0, 2.0}}, {6, 0.02, {}, 3});
  EXPECT_LT(ky_fan_distance(r.value, 2.0 * eta).value, 1e-12);
  EXPECT_TRUE(r.report.accepted);
}

TEST(RiemannIntegral, NonIntegrableFieldIsRejectedNotThrown) {
  const ProbSpace space(200, 3);
  const Ensemble eta = space.generate(1, [](Stream& s) { return s.normal(); });
  const RandomField f = RandomField::separable(eta, 1, [](std::span<const double> x) {
    const double z = x[0] - 1.0 / 3.0;  // never a tag
    return 1.0 / (z * z);
  });
  IntegralResult r = riemann_integral(f, Box{{0.0, 1.0}}, {8, 0.02, {}, 0});
  EXPECT_FALSE(r.report.accepted);
  EXPECT_GT(r.report.last_distance(), 0.5);
}

TEST(RiemannIntegral, BudgetIsEnforced) {
  const ProbSpace space(4, 1);
  const RandomField f = RandomField::deterministic(space, 2, [](std::span<const double>) { return 1.0; });
  EXPECT_THROW(riemann_integral(f, Box::cube(2, 0.0, 1.0), {11, 0.02, {}, 0}), ResourceError);
  const RandomField g = RandomField::deterministic(space, 1, [](std::span<const double>) { return 1.0; });
  EXPECT_THROW(riemann_integral(g, Box{{0.0, 1.0}}, {13, 0.02, {}, 0}), ResourceError);
  EXPECT_THROW(riemann_integral(g, Box{{0.0, 1.0}}, {1, 0.02, {}, 0}), GridError);
  EXPECT_THROW(riemann_integral(f, Box{{0.0, 1.0}}, {4, 0.02, {}, 0}), DomainError);
}

TEST(ImproperIntegral, GaussianTimesRandomAmplitude) {
  const ProbSpace space(400, 4);
  const Ensemble eta = space.generate(1, [](Stream& s) { return s.normal(); });
  const RandomField f = RandomField::separable(eta, 1, [](std::span<const double> x) { return std::exp(-x[0] * x[0]); });
  const IntegralResult r = improper_integral(f, Exhaustion::to_radius({0.0}, 8.0, 3, 10), {8, 0.02, {}, 0});
  EXPECT_TRUE(r.report.accepted);
  EXPECT_LT(ky_fan_distance(r.value, std::sqrt(std::numbers::pi) * eta).value, 1e-6);
}

TEST(ImproperIntegral, TwoDimensionalGaussian) {
  const ProbSpace space(10, 5);
  const RandomField f = RandomField::deterministic(
      space, 2, [](std::span<const double> x) { return std::exp(-x[0] * x[0] - x[1] * x[1]); });
  const IntegralResult r = improper_integral(f, Exhaustion::to_radius({0.0, 0.0}, 6.0, 2, 8), {8, 0.02, {}, 0});
  EXPECT_NEAR(r.value[0], std::numbers::pi, 1e-6);
}

TEST(ImproperIntegral, ExhaustionValidation) {
  const ProbSpace space(4, 1);
  const RandomField f = RandomField::deterministic(space, 1, [](std::span<const double>) { return 0.0; });
  EXPECT_THROW(Exhaustion::to_radius({0.0}, 4.0, 1, 8), ParameterError);
  Exhaustion e{{0.0}, -1.0, 3, 6};
  EXPECT_THROW(improper_integral(f, e), ParameterError);
  EXPECT_THROW(improper_integral(f, Exhaustion::to_radius({0.0, 0.0}, 4.0, 2, 6)), DomainError);
}

TEST(ClassicalIntegral, SimpsonOracles) {
  EXPECT_NEAR(classical_integral([](std::span<const double> x) { return std::exp(x[0]); }, Box{{0.0, 1.0}}, 8),
              std::numbers::e - 1.0, 1e-11);
  EXPECT_NEAR(classical_integral([](std::span<const double> x) { return std::exp(-x[0] * x[0] - x[1] * x[1]); },
                                 Box::cube(2, -6.0, 6.0), 8),
              std::numbers::pi, 1e-9);
  EXPECT_NEAR(simpson([](double u) { return u * u * u; }, 0.0, 2.0, 2), 4.0, 1e-14);
  EXPECT_THROW(simpson([](double u) { return u; }, 0.0, 1.0, 3), GridError);
}

TEST(TaggedPartition, RandomTagsStayInsideTheirCells) {
  const TaggedPartition part(Box{{0.0, 1.0}, {-1.0, 1.0}}, {3, 2}, TagRule::random, 17);
  EXPECT_EQ(part.cell_count(), 32u);
  std::vector<double> x(2);
  for (std::size_t i = 0; i < part.cell_count(); ++i) {
    part.tag(i, x);
    EXPECT_TRUE(part.cell(i).contains(x)) << i;
  }
}

TEST(Pathological, FloorDoesNotDecayAndContinuityHolds) {
  const ProbSpace space(4000, 6);
  const auto rows = pathological_demo(space, 6);
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& r : rows) EXPECT_GE(r.norm.value, 0.05) << "n = " << r.n;
  const RandomField xi = build_pathological_field(space);
  for (double x : {0.9, 0.3, 0.1}) EXPECT_LE(ky_fan_distance(xi(x), xi(x + 1e-4)).value, 0.05) << x;
  EXPECT_THROW(pathological_demo(space, 13), ParameterError);
}
