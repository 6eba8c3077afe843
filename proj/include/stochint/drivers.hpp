#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "stochint/error.hpp"
#include "stochint/field.hpp"
#include "stochint/parallel.hpp"
#include "stochint/prob_core.hpp"

namespace stochint {

enum class DriverKind { wiener, fbm, compensated_poisson, deterministic };

inline const char* to_string(DriverKind k) {
  switch (k) {
    case DriverKind::wiener: return "wiener";
    case DriverKind::fbm: return "fbm";
    case DriverKind::compensated_poisson: return "compensated_poisson";
    case DriverKind::deterministic: return "deterministic";
  }
  return "unknown";
}

inline constexpr std::size_t kMaxDriverGrid = std::size_t{1} << 14;

/// Everything needed to regenerate a driver on a given ProbSpace.
struct DriverSpec {
  DriverKind kind = DriverKind::wiener;
  double horizon = 1.0;
  std::size_t grid_size = 256;
  double hurst = 0.7;             // fbm
  double rate = 1.0;              // compensated_poisson intensity, or constant deterministic density
  std::function<double(double)> density;  // deterministic kind; empty means the constant `rate`
  std::uint64_t stream = 0;       // separates independent drivers on one space

  static DriverSpec wiener(double T, std::size_t n, std::uint64_t stream = 0) {
    return {DriverKind::wiener, T, n, 0.7, 1.0, nullptr, stream};
  }
  static DriverSpec fbm(double T, std::size_t n, double hurst, std::uint64_t stream = 0) {
    return {DriverKind::fbm, T, n, hurst, 1.0, nullptr, stream};
  }
  static DriverSpec compensated_poisson(double T, std::size_t n, double rate, std::uint64_t stream = 0) {
    return {DriverKind::compensated_poisson, T, n, 0.7, rate, nullptr, stream};
  }
  static DriverSpec deterministic(double T, std::size_t n, double density) {
    return {DriverKind::deterministic, T, n, 0.7, density, nullptr, 0};
  }
  static DriverSpec deterministic(double T, std::size_t n, std::function<double(double)> density) {
    return {DriverKind::deterministic, T, n, 0.7, 1.0, std::move(density), 0};
  }
};

/// A stochastic measure on the Borel sets of [0, T], realised per path as the
/// measures of the n cells of a uniform grid (n a power of two).
///
/// mu(A) for a grid-aligned union A is the sum of its cell increments, so
/// finite additivity holds exactly path by path. The deterministic kind keeps
/// a single shared row.
class Driver {
 public:
  Driver(DriverSpec spec, std::size_t paths, std::uint64_t space_id, std::vector<double> increments,
         bool shared)
      : spec_(std::move(spec)),
        paths_(paths),
        space_id_(space_id),
        shared_(shared),
        increments_(std::make_shared<const std::vector<double>>(std::move(increments))) {}

  const DriverSpec& spec() const { return spec_; }
  DriverKind kind() const { return spec_.kind; }
  double horizon() const { return spec_.horizon; }
  std::size_t grid_size() const { return spec_.grid_size; }
  int level() const { return std::countr_zero(spec_.grid_size); }
  double cell() const { return spec_.horizon / static_cast<double>(spec_.grid_size); }
  std::size_t paths() const { return paths_; }
  std::uint64_t space_id() const { return space_id_; }
  bool shared_across_paths() const { return shared_; }

  std::span<const double> increments(std::size_t path) const {
    const std::size_t row = shared_ ? 0 : path;
    return {increments_->data() + row * spec_.grid_size, spec_.grid_size};
  }

  /// Same realisation aggregated onto 2^level cells.
  Driver coarsened(int target_level) const {
    if (target_level < 0 || target_level > level())
      throw GridError("Driver::coarsened: level must lie in [0, log2(n)]");
    if (target_level == level()) return *this;
    const std::size_t coarse = std::size_t{1} << target_level;
    const std::size_t factor = spec_.grid_size / coarse;
    const std::size_t rows = shared_ ? 1 : paths_;
    std::vector<double> out(rows * coarse, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* src = increments_->data() + r * spec_.grid_size;
      for (std::size_t j = 0; j < coarse; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < factor; ++i) s += src[j * factor + i];
        out[r * coarse + j] = s;
      }
    }
    DriverSpec spec = spec_;
    spec.grid_size = coarse;
    return Driver(std::move(spec), paths_, space_id_, std::move(out), shared_);
  }

  /// The measure -mu (same paths, every increment negated).
  Driver negated() const {
    std::vector<double> out(increments_->begin(), increments_->end());
    for (double& v : out) v = -v;
    return Driver(spec_, paths_, space_id_, std::move(out), shared_);
  }

 private:
  DriverSpec spec_;
  std::size_t paths_;
  std::uint64_t space_id_;
  bool shared_;
  std::shared_ptr<const std::vector<double>> increments_;
};

namespace detail {

// Fractional Gaussian noise by circulant embedding (Davies-Harte). The
// square-root eigenvalues are computed once and shared by all paths.
class FgnSynthesis {
 public:
  FgnSynthesis(std::size_t n, double hurst, double cell) : n_(n) {
    const std::size_t big = 2 * n;
    const double h2 = 2.0 * hurst;
    const double scale = 0.5 * std::pow(cell, h2);
    auto gamma = [&](double k) {
      return scale * (std::pow(std::abs(k + 1.0), h2) - 2.0 * std::pow(std::abs(k), h2) +
                      std::pow(std::abs(k - 1.0), h2));
    };
    std::vector<std::complex<double>> row(big);
    for (std::size_t j = 0; j <= n; ++j) row[j] = gamma(static_cast<double>(j));
    for (std::size_t j = n + 1; j < big; ++j) row[j] = gamma(static_cast<double>(big - j));
    std::vector<std::complex<double>> eig;
    Eigen::FFT<double> fft;
    fft.fwd(eig, row);
    root_.resize(big);
    const double tiny = 1e-12 * std::abs(eig[0].real());
    for (std::size_t k = 0; k < big; ++k) {
      double lambda = eig[k].real();
      if (lambda < -tiny) throw ParameterError("fbm: circulant embedding is not nonnegative definite");
      root_[k] = std::sqrt(std::max(lambda, 0.0) / static_cast<double>(big));
    }
  }

  void sample(Stream& s, std::span<double> out) const {
    const std::size_t big = 2 * n_;
    std::vector<std::complex<double>> w(big), y;
    for (std::size_t k = 0; k < big; ++k) {
      const double re = s.normal();
      const double im = s.normal();
      w[k] = root_[k] * std::complex<double>(re, im);
    }
    Eigen::FFT<double> fft;
    fft.fwd(y, w);
    for (std::size_t j = 0; j < n_; ++j) out[j] = y[j].real();
  }

 private:
  std::size_t n_;
  std::vector<double> root_;
};

inline double cell_integral(const std::function<double(double)>& rho, double a, double b) {
  constexpr int panels = 16;  // composite Simpson
  const double h = (b - a) / panels;
  double s = rho(a) + rho(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * rho(a + i * h);
  return s * h / 3.0;
}

}  // namespace detail

inline void validate_driver_spec(const DriverSpec& spec) {
  if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon))
    throw ParameterError("driver: horizon T must be positive");
  if (spec.grid_size == 0 || !std::has_single_bit(spec.grid_size))
    throw GridError("driver: grid size must be a power of two");
  if (spec.grid_size > kMaxDriverGrid) throw GridError("driver: grid size above 2^14");
  if (spec.kind == DriverKind::fbm && !(spec.hurst > 0.5 && spec.hurst < 1.0))
    throw ParameterError("driver: H out of (1/2,1)");
  if (spec.kind == DriverKind::compensated_poisson && !(spec.rate > 0.0))
    throw ParameterError("driver: Poisson rate must be positive");
}

/// Realises the driver described by `spec` on every path of `space`.
inline Driver make_driver(const ProbSpace& space, const DriverSpec& spec) {
  validate_driver_spec(spec);
  const std::size_t n = spec.grid_size;
  const double dt = spec.horizon / static_cast<double>(n);
  const std::uint64_t tag = stream_tag::driver + spec.stream;

  if (spec.kind == DriverKind::deterministic) {
    std::vector<double> row(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (spec.density) {
        row[j] = detail::cell_integral(spec.density, j * dt, (j + 1) * dt);
        if (!std::isfinite(row[j])) throw ParameterError("driver: density is not integrable");
      } else {
        row[j] = spec.rate * dt;
      }
    }
    return Driver(spec, space.paths(), space.id(), std::move(row), true);
  }

  const std::size_t m = space.paths();
  std::vector<double> inc(m * n);
  std::unique_ptr<detail::FgnSynthesis> fgn;
  if (spec.kind == DriverKind::fbm) fgn = std::make_unique<detail::FgnSynthesis>(n, spec.hurst, dt);

  parallel_for(m, [&](std::size_t p) {
    Stream s = space.stream(p, tag);
    std::span<double> row(inc.data() + p * n, n);
    switch (spec.kind) {
      case DriverKind::wiener: {
        const double sd = std::sqrt(dt);
        for (double& v : row) v = sd * s.normal();
        break;
      }
      case DriverKind::fbm:
        fgn->sample(s, row);
        break;
      case DriverKind::compensated_poisson: {
        const double mean = spec.rate * dt;
        for (double& v : row) v = static_cast<double>(s.poisson(mean)) - mean;
        break;
      }
      case DriverKind::deterministic:
        break;
    }
  });
  return Driver(spec, m, space.id(), std::move(inc), false);
}

/// Finite union of disjoint closed intervals inside [0, T].
class IntervalUnion {
 public:
  IntervalUnion() = default;

  explicit IntervalUnion(std::vector<Interval> parts) : parts_(std::move(parts)) {
    std::sort(parts_.begin(), parts_.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (!(parts_[i].lo <= parts_[i].hi)) throw DomainError("IntervalUnion: interval with lo > hi");
      if (i > 0 && parts_[i].lo < parts_[i - 1].hi) throw DomainError("IntervalUnion: overlapping intervals");
    }
  }

  static IntervalUnion single(double lo, double hi) { return IntervalUnion({Interval{lo, hi}}); }

  std::span<const Interval> parts() const { return parts_; }
  bool empty() const { return parts_.empty(); }

 private:
  std::vector<Interval> parts_;
};

/// Grid index an endpoint snaps to; `moved` reports displacements above round-off.
struct SnappedEndpoint {
  std::size_t index;
  bool moved;
};

inline SnappedEndpoint snap_to_grid(const Driver& d, double t) {
  const double T = d.horizon();
  const double slack = 1e-12 * T;
  if (t < -slack || t > T + slack) throw DomainError("interval endpoint outside [0, T]");
  const double pos = std::clamp(t, 0.0, T) / d.cell();
  const double nearest = std::round(pos);
  return {static_cast<std::size_t>(nearest), std::abs(pos - nearest) > 1e-9};
}

/// mu(A) per path: the sum of increments of the grid cells inside A.
inline Ensemble measure(const Driver& d, const IntervalUnion& a) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (const auto& iv : a.parts()) ranges.emplace_back(snap_to_grid(d, iv.lo).index, snap_to_grid(d, iv.hi).index);
  std::vector<double> out(d.paths(), 0.0);
  auto sum_row = [&](std::span<const double> row) {
    double s = 0.0;
    for (const auto& [lo, hi] : ranges)
      for (std::size_t j = lo; j < hi; ++j) s += row[j];
    return s;
  };
  if (d.shared_across_paths()) {
    std::fill(out.begin(), out.end(), sum_row(d.increments(0)));
  } else {
    parallel_for(d.paths(), [&](std::size_t p) { out[p] = sum_row(d.increments(p)); });
  }
  return Ensemble(d.space_id(), std::move(out));
}

/// Per-path sum_j weights[j] * mu(cell_j) on the driver's own grid.
inline Ensemble stochastic_sum(const Driver& d, std::span<const double> weights) {
  if (weights.size() != d.grid_size()) throw GridError("stochastic_sum: one weight per cell");
  auto dot = [&](std::span<const double> row) {
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += weights[j] * row[j];
    return s;
  };
  std::vector<double> out(d.paths());
  if (d.shared_across_paths()) {
    std::fill(out.begin(), out.end(), dot(d.increments(0)));
  } else {
    parallel_for(d.paths(), [&](std::size_t p) { out[p] = dot(d.increments(p)); });
  }
  return Ensemble(d.space_id(), std::move(out));
}

/// Left-point integral sum of a bounded deterministic g against dmu on 2^level cells.
template <class G>
Ensemble integrate_det(const Driver& d, G&& g, int level) {
  const Driver coarse = d.coarsened(level);
  const std::size_t cells = coarse.grid_size();
  const double h = coarse.cell();
  std::vector<double> w(cells);
  for (std::size_t j = 0; j < cells; ++j) {
    w[j] = g(static_cast<double>(j) * h);
    if (!std::isfinite(w[j])) throw PreconditionError("integrate_det: integrand is not bounded on [0, T]");
  }
  return stochastic_sum(coarse, w);
}

template <class G>
Ensemble integrate_det(const Driver& d, G&& g) {
  return integrate_det(d, std::forward<G>(g), d.level());
}

/// The path t -> mu([0, t]), linearly interpolated between grid points, as a field on [0, T].
inline RandomField path_field(const Driver& d) {
  const std::size_t n = d.grid_size();
  const std::size_t rows = d.shared_across_paths() ? 1 : d.paths();
  auto cum = std::make_shared<std::vector<double>>(rows * (n + 1), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    auto inc = d.increments(r);
    double* c = cum->data() + r * (n + 1);
    for (std::size_t j = 0; j < n; ++j) c[j + 1] = c[j] + inc[j];
  }
  const double dt = d.cell();
  const bool shared = d.shared_across_paths();
  return RandomField(
      d.paths(), d.space_id(), 1,
      [cum = std::shared_ptr<const std::vector<double>>(cum), n, dt, shared](std::span<const double> x,
                                                                             std::span<double> out) {
        const double pos = std::clamp(x[0] / dt, 0.0, static_cast<double>(n));
        const std::size_t j = std::min(static_cast<std::size_t>(pos), n - 1);
        const double frac = pos - static_cast<double>(j);
        for (std::size_t p = 0; p < out.size(); ++p) {
          const double* c = cum->data() + (shared ? 0 : p) * (n + 1);
          out[p] = c[j] + frac * (c[j + 1] - c[j]);
        }
      },
      Box{{0.0, d.horizon()}});
}

}  // namespace stochint
