#pragma once

// Spatial and temporal cutoffs built as powers of the quintic smoothstep
// S(s) = 6s^5 - 15s^4 + 10s^3. With m = ceil(2 / (1 - theta)) the ratio of the
// derivatives to the theta-power of the cutoff stays bounded, and S' = S'' = 0
// at both ends makes the junctions C^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "estimate_lab/error.hpp"

namespace elab {

namespace smoothstep {
inline double S(double s) { return s * s * s * (10.0 + s * (-15.0 + 6.0 * s)); }
inline double dS(double s) { return 30.0 * s * s * (1.0 - s) * (1.0 - s); }
inline double d2S(double s) { return 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s); }

/// Value and first two derivatives (in s) of S(clamp(s))^m.
struct Powered {
  double v, d1, d2;
};
inline Powered powered(double s, int m) {
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  if (s >= 1.0) return {1.0, 0.0, 0.0};
  const double f = S(s), f1 = dS(s), f2 = d2S(s);
  const double pm2 = std::pow(f, m - 2);
  return {pm2 * f * f, m * pm2 * f * f1, m * pm2 * ((m - 1) * f1 * f1 + f * f2)};
}
}  // namespace smoothstep

inline int cutoff_exponent(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("theta must lie in (0, 1)");
  return static_cast<int>(std::ceil(2.0 / (1.0 - theta) - 1e-12));
}

/// Decreasing radial cutoff: 1 on [0, R - rho], 0 on [R, inf).
struct SpatialCutoff {
  double R, rho, theta;
  int m;

  double value(double r) const { return smoothstep::powered((R - r) / rho, m).v; }
  double d1(double r) const { return -smoothstep::powered((R - r) / rho, m).d1 / rho; }
  double d2(double r) const { return smoothstep::powered((R - r) / rho, m).d2 / (rho * rho); }
  /// (rho |psi'| + rho^2 |psi''|) / psi^theta.
  double ratio(double r) const {
    const auto p = smoothstep::powered((R - r) / rho, m);
    return (std::abs(p.d1) + std::abs(p.d2)) / std::pow(std::max(p.v, 1e-300), theta);
  }
};

/// Increasing temporal cutoff: 0 on (-inf, t0 - T], 1 on [t0 - T + delta, inf).
struct TemporalCutoff {
  double t0, T, delta, theta;
  int m;

  double start() const { return t0 - T; }
  double value(double t) const { return smoothstep::powered((t - start()) / delta, m).v; }
  double d1(double t) const { return smoothstep::powered((t - start()) / delta, m).d1 / delta; }
  double d2(double t) const { return smoothstep::powered((t - start()) / delta, m).d2 / (delta * delta); }
  /// delta |phi'| / phi^((1 + theta)/2).
  double ratio(double t) const {
    const auto p = smoothstep::powered((t - start()) / delta, m);
    return std::abs(p.d1) / std::pow(std::max(p.v, 1e-300), 0.5 * (1.0 + theta));
  }
};

inline SpatialCutoff make_spatial(double R, double rho, double theta) {
  if (!(rho > 0.0 && rho < R)) throw DomainError("spatial cutoff needs 0 < rho < R");
  return {R, rho, theta, cutoff_exponent(theta)};
}

inline TemporalCutoff make_temporal(double t0, double T, double delta, double theta) {
  if (!(delta > 0.0 && delta < T)) throw DomainError("temporal cutoff needs 0 < delta < T");
  return {t0, T, delta, theta, cutoff_exponent(theta)};
}

struct CutoffMeasure {
  double C = 0.0;              // sup of the defining ratio (inf if unbounded)
  double junction_jump = 0.0;  // largest one-sided mismatch of value, d1, d2 at the junctions
  bool monotone = true;
  bool c2() const { return junction_jump <= 1e-8; }
};

namespace detail {
template <class Cut>
CutoffMeasure measure(const Cut& cut, double lo, double hi, std::size_t points, double j1, double j2,
                      double width, double direction) {
  if (points < 2) throw DomainError("cutoff verification needs at least 2 grid points");
  CutoffMeasure out;
  double prev = cut.value(lo);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    const double v = cut.value(x);
    if (v >= 1e-300) {
      const double r = cut.ratio(x);
      out.C = std::isfinite(r) ? std::max(out.C, r) : std::numeric_limits<double>::infinity();
    }
    if (direction * (v - prev) < -1e-15) out.monotone = false;
    prev = v;
  }
  // Jumps are compared in the scale-free variable (x - junction) / width.
  const double eps = 1e-12 * width;
  for (double j : {j1, j2}) {
    out.junction_jump = std::max({out.junction_jump, std::abs(cut.value(j + eps) - cut.value(j - eps)),
                                  width * std::abs(cut.d1(j + eps) - cut.d1(j - eps)),
                                  width * width * std::abs(cut.d2(j + eps) - cut.d2(j - eps))});
  }
  return out;
}
}  // namespace detail

/// Sup of the defining ratio on a uniform grid of `points` samples of [0, R]
/// (skipping psi < 1e-300) together with junction and monotonicity checks.
inline CutoffMeasure verify_cutoff(const SpatialCutoff& c, std::size_t points = 100000) {
  return detail::measure(c, 0.0, c.R, points, c.R - c.rho, c.R, c.rho, -1.0);
}

/// Same on [t0 - T, t0].
inline CutoffMeasure verify_cutoff(const TemporalCutoff& c, std::size_t points = 100000) {
  return detail::measure(c, c.start(), c.t0, points, c.start(), c.start() + c.delta, c.delta, 1.0);
}

}  // namespace elab
