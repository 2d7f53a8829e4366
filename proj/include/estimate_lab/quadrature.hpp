#pragma once

#include <cmath>
#include <functional>

#include "estimate_lab/error.hpp"

namespace elab {

namespace detail {

template <class Fn>
double simpson_step(const Fn& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth, int& budget) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (--budget < 0 || depth <= 0) {
    throw NumericalError("adaptive Simpson did not converge on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "]");
  }
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, budget) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, budget);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] (b < a allowed). The local
/// tolerance is rel_tol times a magnitude estimate from a coarse pass.
template <class Fn>
double adaptive_simpson(const Fn& f, double a, double b, double rel_tol = 1e-10) {
  if (a == b) return 0.0;
  if (b < a) return -adaptive_simpson(f, b, a, rel_tol);
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  // Coarse magnitude estimate over 16 panels; the target tolerance is relative to it.
  double scale = 0.0;
  for (int i = 0; i < 16; ++i) {
    const double x = a + (b - a) * (i + 0.5) / 16.0;
    scale += std::abs(f(x)) * (b - a) / 16.0;
  }
  const double tol = rel_tol * std::max(scale, 1e-300) * 0.1;
  int budget = 2'000'000;
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, 60, budget);
}

}  // namespace elab
