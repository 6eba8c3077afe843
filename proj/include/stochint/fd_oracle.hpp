#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>

#include "stochint/error.hpp"
#include "stochint/parabolic.hpp"

namespace stochint {

using SourceFunction = std::function<double(const Point&, double)>;

struct CrankNicolsonOptions {
  double dt = 1e-3;
  int rannacher_steps = 2;  // leading CN steps replaced by two implicit Euler half steps each
};

namespace detail {

// Central-difference A on the grid with zero-Neumann boundaries (mirror ghosts).
inline Eigen::SparseMatrix<double> fd_operator_matrix(const EllipticOperator& op, const GridSpec& gs) {
  const std::size_t n = gs.size();
  std::vector<Eigen::Triplet<double>> trip;
  const auto& a = op.a();
  auto reflect = [](long i, long count) { return i < 0 ? -i : (i >= count ? 2 * (count - 1) - i : i); };
  if (gs.dim == 1) {
    const long n0 = static_cast<long>(gs.counts[0]);
    const double h = gs.spacing(0);
    for (long i = 0; i < n0; ++i) {
      auto add = [&](long j, double v) { trip.emplace_back(i, reflect(j, n0), v); };
      add(i - 1, a.a11 / (h * h) - op.b()[0] / (2.0 * h));
      add(i, -2.0 * a.a11 / (h * h) + op.c());
      add(i + 1, a.a11 / (h * h) + op.b()[0] / (2.0 * h));
    }
  } else {
    const long n0 = static_cast<long>(gs.counts[0]), n1 = static_cast<long>(gs.counts[1]);
    const double hx = gs.spacing(0), hy = gs.spacing(1);
    for (long i = 0; i < n0; ++i)
      for (long j = 0; j < n1; ++j) {
        const long row = i * n1 + j;
        auto add = [&](long di, long dj, double v) {
          if (v != 0.0) trip.emplace_back(row, reflect(i + di, n0) * n1 + reflect(j + dj, n1), v);
        };
        add(0, 0, -2.0 * a.a11 / (hx * hx) - 2.0 * a.a22 / (hy * hy) + op.c());
        add(-1, 0, a.a11 / (hx * hx) - op.b()[0] / (2.0 * hx));
        add(1, 0, a.a11 / (hx * hx) + op.b()[0] / (2.0 * hx));
        add(0, -1, a.a22 / (hy * hy) - op.b()[1] / (2.0 * hy));
        add(0, 1, a.a22 / (hy * hy) + op.b()[1] / (2.0 * hy));
        const double m = 2.0 * a.a12 / (4.0 * hx * hy);
        add(1, 1, m);
        add(-1, -1, m);
        add(1, -1, -m);
        add(-1, 1, -m);
      }
  }
  Eigen::SparseMatrix<double> mat(static_cast<long>(n), static_cast<long>(n));
  mat.setFromTriplets(trip.begin(), trip.end());
  return mat;
}

class ThetaStepper {
 public:
  ThetaStepper(const Eigen::SparseMatrix<double>& l, double k, double theta) : l_(l), k_(k), theta_(theta) {
    Eigen::SparseMatrix<double> id(l.rows(), l.cols());
    id.setIdentity();
    lhs_ = id - theta * k * l;
    solver_.setTolerance(1e-13);
    solver_.compute(lhs_);
    if (solver_.info() != Eigen::Success) throw GridError("crank_nicolson: preconditioner setup failed");
  }

  double step() const { return k_; }
  double theta() const { return theta_; }

  Eigen::VectorXd advance(const Eigen::VectorXd& u, const Eigen::VectorXd* src_old, const Eigen::VectorXd* src_new) const {
    Eigen::VectorXd rhs = u + (1.0 - theta_) * k_ * (l_ * u);
    if (src_new) rhs += k_ * (theta_ * *src_new + (1.0 - theta_) * *src_old);
    Eigen::VectorXd next = solver_.solveWithGuess(rhs, u);
    if (solver_.info() != Eigen::Success) throw GridError("crank_nicolson: linear solve did not converge");
    return next;
  }

 private:
  const Eigen::SparseMatrix<double>& l_;
  double k_;
  double theta_;
  Eigen::SparseMatrix<double> lhs_;
  // I - theta k A is well conditioned at the step sizes used here.
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::DiagonalPreconditioner<double>> solver_;
};

}  // namespace detail

/// Crank-Nicolson solution of u_t = A u + source on the grid of `initial`
/// with zero-Neumann boundaries, reported at the requested times.
inline std::vector<GridFunction> crank_nicolson(const EllipticOperator& op, const GridFunction& initial,
                                                const SourceFunction& source, std::span<const double> times,
                                                const CrankNicolsonOptions& opts = {}) {
  const GridSpec& gs = initial.grid;
  if (gs.dim != op.dim()) throw DomainError("crank_nicolson: grid and operator dimensions differ");
  if (!(opts.dt > 0.0)) throw ParameterError("crank_nicolson: dt must be positive");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] < 0.0 || (i > 0 && times[i] < times[i - 1])) throw DomainError("crank_nicolson: times must be sorted and >= 0");

  const Eigen::SparseMatrix<double> l = detail::fd_operator_matrix(op, gs);
  const long n = static_cast<long>(gs.size());
  Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(initial.values.data(), n);
  auto source_at = [&](double t) {
    Eigen::VectorXd s(n);
    for (long k = 0; k < n; ++k) s[k] = source(gs.node(static_cast<std::size_t>(k)), t);
    return s;
  };

  std::optional<detail::ThetaStepper> cn, euler;
  double t = 0.0;
  int cn_steps_taken = 0;
  std::vector<GridFunction> out;
  for (double target : times) {
    const double span = target - t;
    if (span > 0.0) {
      const auto steps = static_cast<long>(std::max(1.0, std::ceil(span / opts.dt - 1e-9)));
      const double k = span / static_cast<double>(steps);
      for (long s = 0; s < steps; ++s) {
        if (cn_steps_taken < opts.rannacher_steps) {
          if (!euler || euler->step() != 0.5 * k) euler.emplace(l, 0.5 * k, 1.0);
          for (int half = 0; half < 2; ++half) {
            if (source) {
              const Eigen::VectorXd sn = source_at(t + 0.5 * k);
              u = euler->advance(u, &sn, &sn);
            } else {
              u = euler->advance(u, nullptr, nullptr);
            }
            t += 0.5 * k;
          }
        } else {
          if (!cn || cn->step() != k) cn.emplace(l, k, 0.5);
          if (source) {
            const Eigen::VectorXd so = source_at(t), sn = source_at(t + k);
            u = cn->advance(u, &so, &sn);
          } else {
            u = cn->advance(u, nullptr, nullptr);
          }
          t += k;
        }
        ++cn_steps_taken;
      }
      t = target;
    }
    out.push_back({gs, std::vector<double>(u.data(), u.data() + n)});
  }
  return out;
}

struct KernelGate;

/// An operator whose closed-form kernel passed the finite-difference gate.
class ValidatedOperator {
 public:
  const EllipticOperator& op() const { return op_; }
  double worst_rel_error() const { return worst_; }

 private:
  ValidatedOperator(EllipticOperator op, double worst) : op_(std::move(op)), worst_(worst) {}
  friend struct KernelGate;
  friend KernelGate validate_kernel(const EllipticOperator&, std::span<const double>, double, double,
                                    const CrankNicolsonOptions&);

  EllipticOperator op_;
  double worst_;
};

struct KernelGateRow {
  double t;
  double rel_linf;  // max |u_fd - p| / max |p| over the grid
};

struct KernelGate {
  std::vector<KernelGateRow> rows;
  double tolerance = 5e-3;
  bool passed = false;
  std::optional<ValidatedOperator> validated;
};

inline constexpr double kKernelGateTolerance = 5e-3;

/// Compares x -> p(x, 0, t) with a Crank-Nicolson solve started from a
/// discrete delta at the origin, on a grid of spacing h wide enough for the
/// truncation radius at the largest t.
inline KernelGate validate_kernel(const EllipticOperator& op, std::span<const double> times, double h = 0.05,
                                  double tolerance = kKernelGateTolerance, const CrankNicolsonOptions& cn = {}) {
  if (times.empty()) throw DomainError("validate_kernel: no validation times");
  const double tmax = *std::max_element(times.begin(), times.end());
  const double half = std::ceil((truncation_radius(op, tmax) + 4.0 * h) / h) * h;
  const GridSpec gs = GridSpec::with_spacing(op.dim(), -half, half, h);
  GridFunction delta{gs, std::vector<double>(gs.size(), 0.0)};
  const std::size_t mid = op.dim() == 1 ? gs.counts[0] / 2 : (gs.counts[0] / 2) * gs.counts[1] + gs.counts[1] / 2;
  delta.values[mid] = 1.0 / std::pow(h, op.dim());

  std::vector<double> sorted(times.begin(), times.end());
  std::sort(sorted.begin(), sorted.end());
  const auto fd = crank_nicolson(op, delta, nullptr, sorted, cn);

  KernelGate gate;
  gate.tolerance = tolerance;
  double worst = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double peak = 0.0, err = 0.0;
    for (std::size_t k = 0; k < gs.size(); ++k) {
      const double p = kernel(op, gs.node(k), {0.0, 0.0}, sorted[i]);
      peak = std::max(peak, std::abs(p));
      err = std::max(err, std::abs(fd[i].values[k] - p));
    }
    gate.rows.push_back({sorted[i], err / peak});
    worst = std::max(worst, err / peak);
  }
  gate.passed = worst <= tolerance;
  if (gate.passed) gate.validated = ValidatedOperator(op, worst);
  return gate;
}

}  // namespace stochint
