#pragma once

// Structural quantities of a scenario: the barrier w, the constants mu and
// gamma, the parabolic data tau and sigma, and the piecewise bound Z.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "estimate_lab/error.hpp"
#include "estimate_lab/fields.hpp"
#include "estimate_lab/nonlinearity.hpp"
#include "estimate_lab/parallel.hpp"
#include "estimate_lab/scenario.hpp"

namespace elab {

/// Per-node ingredients shared by every estimate.
struct Barrier {
  SpaceTimeField gap;   // xi - G(u)
  SpaceTimeField norm;  // F'(u) |grad u| / u, the left side of the gradient bound
  SpaceTimeField w;     // (norm / gap)^2
};

/// xi - G(u) and the normalised gradient at every node of the ball. Throws
/// HypothesisViolation where xi - G(u) <= 0.
inline Barrier compute_barrier(const Scenario& sc) {
  const Domain& d = *sc.domain;
  Barrier b{sc.u.like(), sc.u.like(), sc.u.like()};
  for (std::size_t j = 0; j < sc.u.time_count(); ++j) {
    parallel_for(d.size(), [&](std::size_t i) {
      if (!d.in_ball(i)) return;
      const double s = sc.u(i, j);
      const double gap = xi_minus_G(sc.nl, s);
      if (!(gap > 0.0))
        throw HypothesisViolation("xi - G(u) = " + std::to_string(gap) + " <= 0 at node " + std::to_string(i) +
                                  ", time index " + std::to_string(j));
      const double n = sc.nl.dF(s) * gradient(sc.u, i, j).norm() / s;
      b.gap(i, j) = gap;
      b.norm(i, j) = n;
      b.w(i, j) = (n / gap) * (n / gap);
    });
  }
  return b;
}

inline SpaceTimeField compute_barrier_w(const Scenario& sc) { return compute_barrier(sc).w; }

struct StructuralConstants {
  double mu1 = 0.0, mu2 = 0.0, mu = 0.0;
  double gamma1 = 0.0, gamma2 = 0.0, gamma3 = 0.0, gamma = 0.0;
  bool third_order_degraded = false;  // a first-order D^3 stencil entered gamma3
};

inline StructuralConstants compute_structural(const Scenario& sc) {
  const Domain& d = *sc.domain;
  const double k = d.k();
  StructuralConstants out;
  struct Local {
    double mu1 = 0, mu2 = 0, g1 = 0, g2 = 0, g3 = 0;
    bool degraded = false;
  };
  for (std::size_t j = 0; j < sc.u.time_count(); ++j) {
    std::vector<Local> local(d.size());
    const double t = sc.u.times()[j];
    parallel_for(d.size(), [&](std::size_t i) {
      if (!d.in_ball(i)) return;
      const double s = sc.u(i, j);
      const double f1 = sc.nl.dF(s), f2 = sc.nl.d2F(s);
      if (!(f1 > 0.0))
        throw HypothesisViolation("F'(u) <= 0 at node " + std::to_string(i) + ", time index " + std::to_string(j));
      const Point x = d.coord(i);
      const double a = sc.a(x, t, s);
      const double H = sc.H_at(i, j);
      const HPartials hp = eval_H_partials(sc, i, j);
      const double gap = xi_minus_G(sc.nl, s);
      Local& L = local[i];
      const double m1 = k * a * f1 + H * f2 / f1 + hp.du - H / s + H * f1 / (gap * s);
      L.mu1 = std::max(0.0, m1);
      L.g1 = f1 * hp.dx.norm() / s;
      const bool a_moves = sc.a.depends_on_u() || sc.a.depends_on_space();
      const double div = a_moves ? std::abs(div_Fprime_grad(sc.u, sc.nl, i, j)) : 0.0;
      L.mu2 = std::abs(sc.a.du(x, t, s)) * div;
      L.g2 = f1 / s * sc.a.dx(x, t, s).norm() * div;
      double g3 = 0.0;
      if (hp.domega.norm() > 0.0) g3 += hp.domega.norm() * hessian(sc.u, i, j).norm();
      if (hp.dOmega > 0.0) {
        const auto third = third_derivative_norm(sc.u, i, j);
        g3 += hp.dOmega * third.norm;
        L.degraded = third.degraded;
      }
      L.g3 = f1 / s * g3;
    });
    for (const auto& L : local) {
      out.mu1 = std::max(out.mu1, L.mu1);
      out.mu2 = std::max(out.mu2, L.mu2);
      out.gamma1 = std::max(out.gamma1, L.g1);
      out.gamma2 = std::max(out.gamma2, L.g2);
      out.gamma3 = std::max(out.gamma3, L.g3);
      out.third_order_degraded = out.third_order_degraded || L.degraded;
    }
  }
  out.mu = out.mu1 + out.mu2;
  out.gamma = out.gamma1 + out.gamma2 + out.gamma3;
  return out;
}

struct ParabolicData {
  double tau_u = 0.0;    // initial slice
  double sigma_u = 0.0;  // lateral boundary x whole window
};

inline ParabolicData compute_parabolic_data(const Scenario&, const Barrier& b) {
  auto ratio = [&](std::size_t i, std::size_t j) { return b.norm(i, j) / b.gap(i, j); };
  return {sup_over(b.norm, Region{SpatialRegion::ball, TemporalRegion::initial, 0.0, 0.0}, ratio),
          sup_over(b.norm, Region{SpatialRegion::boundary, TemporalRegion::all, 0.0, 0.0}, ratio)};
}
inline ParabolicData compute_parabolic_data(const Scenario& sc) { return compute_parabolic_data(sc, compute_barrier(sc)); }

enum class Regime { B1, B2, B3, I };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::B1: return "B1";
    case Regime::B2: return "B2";
    case Regime::B3: return "B3";
    case Regime::I: return "I";
  }
  return "?";
}

/// Scalars of the regime decomposition for given (rho, delta, C).
struct RegimeBound {
  double rho = 0.0, delta = 0.0, C_cal = 1.0;
  double R = 1.0, T = 1.0, k_plus = 0.0;
  double tau_u = 0.0, sigma_u = 0.0;
  double C_scalar = 0.0, T_scalar = 0.0, S_scalar = 0.0;
  double C_sq = 0.0, T_sq = 0.0, S_sq = 0.0;
  double beta1 = 0.0, beta2 = 0.0, beta3 = 0.0, iota = 0.0;

  double beta(Regime r) const {
    switch (r) {
      case Regime::B1: return beta1;
      case Regime::B2: return beta2;
      case Regime::B3: return beta3;
      case Regime::I: return iota;
    }
    return 0.0;
  }

  /// Inner ball closed, late window includes t0 - T + delta.
  static Regime classify(const SpaceTimeField& grid, double rho, double delta, std::size_t node, std::size_t j) {
    const bool inner = Region{SpatialRegion::inner, TemporalRegion::all, rho, delta}.spatial_contains(grid.domain(), node);
    const bool late = Region{SpatialRegion::ball, TemporalRegion::late, rho, delta}.temporal_contains(grid, j);
    if (inner) return late ? Regime::I : Regime::B1;
    return late ? Regime::B2 : Regime::B3;
  }
  Regime regime(const SpaceTimeField& grid, std::size_t node, std::size_t j) const {
    return classify(grid, rho, delta, node, j);
  }
  double Z(const SpaceTimeField& grid, std::size_t node, std::size_t j) const { return beta(regime(grid, node, j)); }

  SpaceTimeField Z_field(const SpaceTimeField& grid) const {
    SpaceTimeField z = grid.like();
    for (std::size_t j = 0; j < grid.time_count(); ++j)
      for (std::size_t i = 0; i < grid.node_count(); ++i)
        if (grid.domain().in_ball(i)) z(i, j) = Z(grid, i, j);
    return z;
  }
};

/// Fills the regime scalars from constants already computed.
inline RegimeBound make_regime_bound(double R, double T, double k, const StructuralConstants& sc,
                                     const ParabolicData& pd, double rho, double delta, double C_cal) {
  if (!(rho > 0.0 && rho < R)) throw DomainError("rho must lie in (0, R); got " + std::to_string(rho));
  if (!(delta > 0.0 && delta < T)) throw DomainError("delta must lie in (0, T); got " + std::to_string(delta));
  if (!(C_cal >= 0.0)) throw DomainError("calibration constant must be nonnegative");
  RegimeBound rb;
  rb.rho = rho;
  rb.delta = delta;
  rb.C_cal = C_cal;
  rb.R = R;
  rb.T = T;
  rb.k_plus = std::max(k, 0.0);
  rb.tau_u = pd.tau_u;
  rb.sigma_u = pd.sigma_u;
  rb.C_scalar = std::sqrt(sc.mu) + std::cbrt(sc.gamma);
  rb.T_scalar = 1.0 / std::sqrt(delta);
  rb.S_scalar = 1.0 / rho + 1.0 / std::sqrt(rho * (R - rho)) + std::pow(rb.k_plus, 0.25) / std::sqrt(rho);
  rb.C_sq = sc.mu + std::pow(sc.gamma, 2.0 / 3.0);
  rb.T_sq = 1.0 / delta;
  rb.S_sq = 1.0 / (rho * rho) + 1.0 / (rho * (R - rho)) + std::sqrt(rb.k_plus) / rho;
  const double tau = pd.tau_u, sigma = pd.sigma_u;
  rb.beta1 = tau + std::min(sigma, C_cal * rb.S_scalar);
  rb.beta2 = sigma + std::min(tau, C_cal * rb.T_scalar);
  rb.beta3 = sigma + tau;
  rb.iota = std::min(sigma + tau, C_cal * (rb.T_scalar + rb.S_scalar));
  return rb;
}

inline RegimeBound compute_regime_bound(const Scenario& sc, const StructuralConstants& s, const ParabolicData& pd,
                                        double rho, double delta, double C_cal) {
  return make_regime_bound(sc.domain->R(), sc.T, sc.domain->k(), s, pd, rho, delta, C_cal);
}

inline RegimeBound compute_regime_bound(const Scenario& sc, double rho, double delta, double C_cal) {
  const auto b = compute_barrier(sc);
  return compute_regime_bound(sc, compute_structural(sc), compute_parabolic_data(sc, b), rho, delta, C_cal);
}

}  // namespace elab
