// Stochastic heat equation dX = X'' dt + exp(-x^2) dW on the line, X(x, 0) = exp(-x^2).
// Prints path statistics of X(0, t) and the weak-form residual at each level.

#include <cmath>
#include <cstdio>

#include "stochint/spde.hpp"

using namespace stochint;

int main() {
  const EllipticOperator op = EllipticOperator::heat(1);
  const std::vector<double> gate_times{0.1, 0.5};
  const KernelGate gate = validate_kernel(op, gate_times);
  if (!gate.validated) {
    std::printf("kernel gate failed\n");
    return 1;
  }

  const ProbSpace space(1000, 7);
  const Driver w = make_driver(space, DriverSpec::wiener(1.0, 1024));
  auto gauss = [](const Point& x) { return std::exp(-x[0] * x[0]); };
  ProblemData data;
  data.initial.push_back({space.constant(1.0), gauss});
  data.forcing.push_back({gauss, nullptr, w});

  const GridSpec grid = GridSpec::with_spacing(1, -8.0, 8.0, 0.05);
  const std::vector<double> times{0.125, 0.25, 0.5};
  const TestFunction phi = TestFunction::gaussian(1, {0.0, 0.0}, 1.0);
  const std::size_t origin = grid.size() / 2;

  for (int level = 6; level <= 8; ++level) {
    const FieldSolution sol = mild_solution(*gate.validated, data, grid, times, level);
    std::printf("level %d\n", level);
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const Ensemble x = sol.at(ti, origin);
      std::printf("  t = %-6g  mean X(0,t) = %.5f  var = %.5f\n", times[ti], x.mean(), x.variance());
    }
    std::printf("  weak residual at t = 0.5: %.4f\n", weak_residual(sol, phi, 0.5).residual.value);
  }
  return 0;
}
