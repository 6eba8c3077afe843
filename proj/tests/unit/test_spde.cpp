#include <gtest/gtest.h>

#include <cmath>

#include "stochint/fd_oracle.hpp"
#include "stochint/spde.hpp"

using namespace stochint;

namespace {

ValidatedOperator validated(const EllipticOperator& op) {
  const std::vector<double> times{0.1, 0.5};
  auto gate = validate_kernel(op, times);
  if (!gate.validated) throw std::runtime_error("kernel gate failed in test setup");
  return *gate.validated;
}

double gauss(const Point& x) { return std::exp(-x[0] * x[0]); }

}  // namespace

TEST(MildSolution, InitialDataOnlyIsTheHeatFlow) {
  const ProbSpace space(20, 1);
  const Ensemble amp = space.generate(1, [](Stream& s) { return s.normal(); });
  ProblemData data;
  data.initial.push_back({amp, gauss});
  const GridSpec grid = GridSpec::with_spacing(1, -3.0, 3.0, 0.25);
  const std::vector<double> times{0.25, 0.5};
  const FieldSolution sol = mild_solution(validated(EllipticOperator::heat()), data, grid, times, 6);
  for (std::size_t ti = 0; ti < 2; ++ti) {
    const double s = 1.0 + 4.0 * times[ti];
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double x = grid.node(k)[0];
      const auto v = sol.samples(ti, k);
      for (std::size_t p = 0; p < 20; p += 7) ASSERT_NEAR(v[p], amp[p] * std::exp(-x * x / s) / std::sqrt(s), 1e-9);
    }
  }
}

TEST(MildSolution, ConstantForcingAgainstLebesgueIsTime) {
  // f = 1, dmu = ds: X(x, t) = int_0^t S(t - s) 1 ds = t.
  const ProbSpace space(4, 2);
  ProblemData data;
  data.forcing.push_back({[](const Point&) { return 1.0; }, nullptr, make_driver(space, DriverSpec::deterministic(1.0, 256, 1.0))});
  const GridSpec grid = GridSpec::with_spacing(1, -1.0, 1.0, 0.5);
  const std::vector<double> times{0.25, 1.0};
  const FieldSolution sol = mild_solution(validated(EllipticOperator::heat()), data, grid, times, 8);
  for (std::size_t ti = 0; ti < 2; ++ti)
    for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_NEAR(sol.samples(ti, k)[1], times[ti], 1e-8);
}

TEST(MildSolution, WienerVarianceWithUnitForcing) {
  const ProbSpace space(3000, 3);
  ProblemData data;
  data.forcing.push_back({[](const Point&) { return 1.0; }, nullptr, make_driver(space, DriverSpec::wiener(1.0, 256))});
  const GridSpec grid = GridSpec::with_spacing(1, -1.0, 1.0, 0.5);
  const std::vector<double> times{0.5};
  const FieldSolution sol = mild_solution(validated(EllipticOperator::heat()), data, grid, times, 8);
  const Ensemble x = sol.at(0, 2);
  const double se = 0.5 * std::sqrt(2.0 / 2999.0);
  EXPECT_LT(std::abs(x.variance() - 0.5), 4.0 * se);
}

TEST(MildSolution, Preconditions) {
  const ProbSpace a(10, 4), b(10, 5);
  const auto vop = validated(EllipticOperator::heat());
  const GridSpec grid = GridSpec::with_spacing(1, -1.0, 1.0, 0.5);
  const std::vector<double> times{0.5};
  ProblemData mixed;
  mixed.initial.push_back({a.constant(1.0), gauss});
  mixed.forcing.push_back({gauss, nullptr, make_driver(b, DriverSpec::wiener(1.0, 64))});
  EXPECT_THROW(mild_solution(vop, mixed, grid, times, 6), AlignmentError);

  ProblemData two;
  two.forcing.push_back({gauss, nullptr, make_driver(a, DriverSpec::wiener(1.0, 64))});
  two.forcing.push_back({gauss, nullptr, make_driver(a, DriverSpec::wiener(1.0, 64, 1))});
  EXPECT_THROW(mild_solution(vop, two, grid, times, 6), PreconditionError);
  EXPECT_NO_THROW(multi_measure_solution(vop, two, grid, times, 6));
  EXPECT_THROW(multi_measure_solution(vop, two, grid, times, 7), GridError);
  EXPECT_THROW(multi_measure_solution(vop, two, grid, std::vector<double>{2.0}, 6), DomainError);
  EXPECT_THROW(multi_measure_solution(vop, ProblemData{}, grid, times, 6), DomainError);
}

TEST(WeakResidual, HeatEquationWithWienerForcing) {
  const ProbSpace space(400, 6);
  ProblemData data;
  data.initial.push_back({space.constant(1.0), gauss});
  data.forcing.push_back({gauss, nullptr, make_driver(space, DriverSpec::wiener(1.0, 256))});
  const GridSpec grid = GridSpec::with_spacing(1, -8.0, 8.0, 0.05);
  const std::vector<double> times{0.5};
  const FieldSolution sol = mild_solution(validated(EllipticOperator::heat()), data, grid, times, 7);
  const WeakResidual w = weak_residual(sol, TestFunction::gaussian(1, {0.0, 0.0}, 1.0), 0.5, {0.05});
  EXPECT_LE(w.residual.value, 0.05);
  EXPECT_GT(w.truncation_radius, 0.0);
  EXPECT_THROW(weak_residual(sol, TestFunction::constant(1, 1.0), 0.5), PreconditionError);
}

TEST(Crosscheck, DeterministicDriverAgainstCrankNicolson) {
  const ProbSpace space(10, 7);
  ProblemData data;
  data.initial.push_back({space.generate(stream_tag::initial_field, [](Stream& s) { return 1.0 + 0.25 * s.normal(); }), gauss});
  data.forcing.push_back({gauss, nullptr, make_driver(space, DriverSpec::deterministic(1.0, 1024, 1.0))});
  const GridSpec grid = GridSpec::with_spacing(1, -4.0, 4.0, 0.05);
  const std::vector<double> times{0.25, 0.5, 1.0};
  const CrosscheckReport rep = deterministic_crosscheck(validated(EllipticOperator::heat()), data, grid, times, 10);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_LE(rep.worst, 1e-2);

  ProblemData random;
  random.forcing.push_back({gauss, nullptr, make_driver(space, DriverSpec::wiener(1.0, 64))});
  EXPECT_THROW(deterministic_crosscheck(validated(EllipticOperator::heat()), random, grid, times, 6), PreconditionError);
}

TEST(Uniqueness, ProbeSeesShiftsAndRequiresSelfAdjointness) {
  const ProbSpace space(300, 8);
  ProblemData data;
  data.initial.push_back({space.constant(1.0), gauss});
  data.forcing.push_back({gauss, nullptr, make_driver(space, DriverSpec::wiener(1.0, 256))});
  const GridSpec grid = GridSpec::with_spacing(1, -8.0, 8.0, 0.05);
  const std::vector<double> times{0.5};
  const auto heat = validated(EllipticOperator::heat());
  const FieldSolution a = mild_solution(heat, data, grid, times, 7);
  const TestFunction phi = TestFunction::gaussian(1, {0.0, 0.0}, 1.0);
  EXPECT_EQ(uniqueness_probe(a, a, phi, 0.5).value, 0.0);
  // int phi = sqrt(pi), so a constant shift c moves the projection by c sqrt(pi).
  EXPECT_NEAR(uniqueness_probe(a, a.shifted(0.1), phi, 0.5).value, 0.1 * std::sqrt(std::numbers::pi), 1e-3);

  const auto drift = validated(EllipticOperator(1, Sym2{1.0, 0.0, 1.0}, {0.5, 0.0}));
  const FieldSolution b = mild_solution(drift, data, grid, times, 7);
  EXPECT_THROW(uniqueness_probe(b, b, phi, 0.5), PreconditionError);
}
