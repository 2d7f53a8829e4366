#pragma once

// The diffusion nonlinearity F and everything derived from it: the primitive
// G(s) = int_{s0}^s F'(h)/h dh, its logarithmic reparametrisation g(r) = G(e^r),
// the coefficient lambda, and sampled checks of the structural hypotheses.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "estimate_lab/error.hpp"
#include "estimate_lab/quadrature.hpp"

namespace elab {

enum class Family { identity, power, custom };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::identity: return "identity";
    case Family::power: return "power";
    case Family::custom: return "custom";
  }
  return "?";
}

/// F together with the constants M (upper bound of the solution), s0 (base
/// point of G) and xi (offset in xi - G). Immutable once built.
class Nonlinearity {
 public:
  using Scalar = std::function<double(double)>;

  static Nonlinearity identity(double M, double s0, double xi) {
    Nonlinearity nl(Family::identity, M, s0, xi);
    nl.p_ = 1.0;
    return nl;
  }

  /// F(s) = s^p. p == 1 is routed to the identity family: the closed form of
  /// G for p != 1 has a removable singularity there.
  static Nonlinearity power(double p, double M, double s0, double xi) {
    if (!(p > 0.0)) throw DomainError("power nonlinearity needs p > 0, got " + std::to_string(p));
    if (p == 1.0) return identity(M, s0, xi);
    Nonlinearity nl(Family::power, M, s0, xi);
    nl.p_ = p;
    return nl;
  }

  static Nonlinearity custom(Scalar F, Scalar dF, Scalar d2F, double M, double s0, double xi,
                             std::string label = "custom") {
    Nonlinearity nl(Family::custom, M, s0, xi);
    nl.F_ = std::move(F);
    nl.dF_ = std::move(dF);
    nl.d2F_ = std::move(d2F);
    nl.label_ = std::move(label);
    return nl;
  }

  /// F(s) = sum_i coeffs[i] s^i.
  static Nonlinearity polynomial(std::vector<double> coeffs, double M, double s0, double xi) {
    auto eval = [](const std::vector<double>& c, double s) {
      double acc = 0.0;
      for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
      return acc;
    };
    auto derive = [](const std::vector<double>& c) {
      std::vector<double> d;
      for (std::size_t i = 1; i < c.size(); ++i) d.push_back(static_cast<double>(i) * c[i]);
      return d;
    };
    auto c1 = derive(coeffs);
    auto c2 = derive(c1);
    std::ostringstream label;
    label << "polynomial(";
    for (std::size_t i = 0; i < coeffs.size(); ++i) label << (i ? "," : "") << coeffs[i];
    label << ")";
    return custom([eval, coeffs](double s) { return eval(coeffs, s); },
                  [eval, c1](double s) { return eval(c1, s); },
                  [eval, c2](double s) { return eval(c2, s); }, M, s0, xi, label.str());
  }

  Family family() const { return family_; }
  double exponent() const { return p_; }
  double M() const { return M_; }
  double s0() const { return s0_; }
  double xi() const { return xi_; }
  std::string label() const {
    if (family_ == Family::power) return "power(" + std::to_string(p_) + ")";
    if (family_ == Family::identity) return "identity";
    return label_;
  }

  Nonlinearity with_bound(double M) const {
    Nonlinearity copy = *this;
    copy.M_ = M;
    return copy;
  }
  Nonlinearity with_base(double s0, double xi) const {
    Nonlinearity copy = *this;
    copy.s0_ = s0;
    copy.xi_ = xi;
    return copy;
  }

  double F(double s) const {
    switch (family_) {
      case Family::identity: return s;
      case Family::power: return std::pow(s, p_);
      case Family::custom: return F_(s);
    }
    return 0.0;
  }
  double dF(double s) const {
    switch (family_) {
      case Family::identity: return 1.0;
      case Family::power: return p_ * std::pow(s, p_ - 1.0);
      case Family::custom: return dF_(s);
    }
    return 0.0;
  }
  double d2F(double s) const {
    switch (family_) {
      case Family::identity: return 0.0;
      case Family::power: return p_ * (p_ - 1.0) * std::pow(s, p_ - 2.0);
      case Family::custom: return d2F_(s);
    }
    return 0.0;
  }

 private:
  Nonlinearity(Family f, double M, double s0, double xi) : family_(f), M_(M), s0_(s0), xi_(xi) {
    if (!(M > 0.0)) throw DomainError("nonlinearity bound M must be positive");
    if (!(s0 > 0.0)) throw DomainError("base point s0 must be positive");
  }

  Family family_;
  double p_ = 1.0;
  double M_;
  double s0_;
  double xi_;
  Scalar F_, dF_, d2F_;
  std::string label_;
};

/// G(s) = int_{s0}^s F'(h)/h dh. Closed form for identity and power families,
/// adaptive Simpson (relative tolerance 1e-10) otherwise. The quadrature runs
/// in r = ln h, where the integrand F'(e^r) has no 1/h singularity.
inline double eval_G(const Nonlinearity& nl, double s) {
  if (!(s > 0.0)) throw DomainError("G is defined on (0, M]; got s = " + std::to_string(s));
  switch (nl.family()) {
    case Family::identity: return std::log(s / nl.s0());
    case Family::power: {
      const double q = 1.0 - nl.exponent();
      return nl.exponent() / q * (std::pow(nl.s0(), -q) - std::pow(s, -q));
    }
    case Family::custom:
      return adaptive_simpson([&](double r) { return nl.dF(std::exp(r)); }, std::log(nl.s0()),
                              std::log(s), 1e-10);
  }
  return 0.0;
}

/// xi - G(s), evaluated without cancellation for the closed-form families.
inline double xi_minus_G(const Nonlinearity& nl, double s) {
  if (nl.family() == Family::power) {
    if (!(s > 0.0)) throw DomainError("G is defined on (0, M]; got s = " + std::to_string(s));
    const double q = 1.0 - nl.exponent();
    return nl.xi() + nl.exponent() / q * (std::pow(s, -q) - std::pow(nl.s0(), -q));
  }
  return nl.xi() - eval_G(nl, s);
}

struct GDerivatives {
  double first;   // g'(r)  = F'(e^r)
  double second;  // g''(r) = e^r F''(e^r)
};

inline void require_in_range(const Nonlinearity& nl, double r) {
  if (std::exp(r) > nl.M() * (1.0 + 1e-12)) {
    throw DomainError("e^r = " + std::to_string(std::exp(r)) + " exceeds M = " +
                      std::to_string(nl.M()));
  }
}

/// g(r) = G(e^r).
inline double eval_g(const Nonlinearity& nl, double r) {
  require_in_range(nl, r);
  return eval_G(nl, std::exp(r));
}

inline GDerivatives eval_g_derivs(const Nonlinearity& nl, double r) {
  require_in_range(nl, r);
  const double s = std::exp(r);
  return {nl.dF(s), s * nl.d2F(s)};
}

/// lambda(r) = g'/(xi - g) - 1 + sqrt(n)|g''| / (2 g').
inline double eval_lambda(const Nonlinearity& nl, double r, int n) {
  const auto [g1, g2] = eval_g_derivs(nl, r);
  const double gap = xi_minus_G(nl, std::exp(r));
  if (!(gap > 0.0)) throw HypothesisViolation("xi - g(r) <= 0 at r = " + std::to_string(r));
  if (!(g1 > 0.0)) throw HypothesisViolation("g'(r) <= 0 at r = " + std::to_string(r));
  return g1 / gap - 1.0 + std::sqrt(static_cast<double>(n)) * std::abs(g2) / (2.0 * g1);
}

struct HypothesisReport {
  double kappa_min = std::numeric_limits<double>::infinity();
  double eta_min = std::numeric_limits<double>::infinity();
  double Gamma_max = 0.0;
  double Xi_min = std::numeric_limits<double>::infinity();
  std::size_t sample_count = 0;
  bool all_satisfied = false;

  /// First failing condition, empty when all hold.
  std::string failing_condition() const {
    if (!(kappa_min > 0.0)) return "1 - sqrt(n)|F''(s)|s/F'(s) >= kappa > 0 (kappa_min = " + std::to_string(kappa_min) + ")";
    if (!(eta_min > 0.0)) return "xi - G(s) >= eta > 0 (eta_min = " + std::to_string(eta_min) + ")";
    if (!std::isfinite(Gamma_max)) return "F'(s)/(xi - G(s)) <= Gamma (unbounded)";
    if (!(Xi_min >= 0.0)) return "2F'(s) - sqrt(n)|F''(s)|s(xi - G(s))/F'(s) >= 0 (min = " + std::to_string(Xi_min) + ")";
    return {};
  }
};

/// Geometric grid of `samples` points on [M 1e-8, M] plus M and min(s0, M).
inline std::vector<double> hypothesis_samples(const Nonlinearity& nl, std::size_t samples) {
  if (samples < 2) throw DomainError("check_hypotheses needs at least 2 samples");
  std::vector<double> s;
  s.reserve(samples + 2);
  const double lo = nl.M() * 1e-8;
  const double ratio = std::log(nl.M() / lo) / static_cast<double>(samples - 1);
  for (std::size_t i = 0; i < samples; ++i) s.push_back(lo * std::exp(ratio * static_cast<double>(i)));
  s.push_back(nl.M());
  s.push_back(std::min(nl.s0(), nl.M()));
  std::sort(s.begin(), s.end());
  return s;
}

/// Evaluates the structural conditions on F at dense samples of (0, M].
/// Violations (including F' <= 0) are reported, never thrown.
inline HypothesisReport check_hypotheses(const Nonlinearity& nl, int n, std::size_t samples = 10000) {
  if (n < 1) throw DomainError("dimension must be >= 1");
  const auto grid = hypothesis_samples(nl, samples);
  const double rn = std::sqrt(static_cast<double>(n));
  HypothesisReport rep;
  rep.sample_count = grid.size();
  // Custom families accumulate G along the sorted grid rather than integrating
  // from s0 at every sample.
  std::vector<double> gap(grid.size());
  if (nl.family() == Family::custom) {
    const auto anchor = std::lower_bound(grid.begin(), grid.end(), std::min(nl.s0(), nl.M()));
    const std::size_t k = static_cast<std::size_t>(anchor - grid.begin());
    double G = eval_G(nl, grid[k]);
    gap[k] = nl.xi() - G;
    auto integrand = [&](double r) { return nl.dF(std::exp(r)); };
    for (std::size_t i = k + 1; i < grid.size(); ++i) {
      G += adaptive_simpson(integrand, std::log(grid[i - 1]), std::log(grid[i]), 1e-12);
      gap[i] = nl.xi() - G;
    }
    G = nl.xi() - gap[k];
    for (std::size_t i = k; i-- > 0;) {
      G -= adaptive_simpson(integrand, std::log(grid[i]), std::log(grid[i + 1]), 1e-12);
      gap[i] = nl.xi() - G;
    }
  } else {
    for (std::size_t i = 0; i < grid.size(); ++i) gap[i] = xi_minus_G(nl, grid[i]);
  }
  bool fprime_positive = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = grid[i];
    const double f1 = nl.dF(s), f2 = nl.d2F(s);
    if (!(f1 > 0.0)) {
      fprime_positive = false;
      rep.kappa_min = -std::numeric_limits<double>::infinity();
      continue;
    }
    const double curvature = rn * std::abs(f2) * s / f1;
    rep.kappa_min = std::min(rep.kappa_min, 1.0 - curvature);
    rep.eta_min = std::min(rep.eta_min, gap[i]);
    rep.Gamma_max = gap[i] > 0.0 ? std::max(rep.Gamma_max, f1 / gap[i])
                                 : std::numeric_limits<double>::infinity();
    rep.Xi_min = std::min(rep.Xi_min, 2.0 * f1 - curvature * gap[i]);
  }
  rep.all_satisfied = fprime_positive && rep.kappa_min > 0.0 && rep.eta_min > 0.0 &&
                      std::isfinite(rep.Gamma_max) && rep.Xi_min >= 0.0;
  return rep;
}

struct PowerLawConstants {
  double kappa, eta, Gamma, xi, s0;
};

/// Admissible exponents for u_t = Delta u^p in dimension n: (1 - 1/sqrt(n), 1].
inline std::pair<double, double> admissible_power_range(int n) {
  return {1.0 - 1.0 / std::sqrt(static_cast<double>(n)), 1.0};
}

/// Constants making F(s) = s^p satisfy every structural hypothesis on (0, 1].
inline PowerLawConstants power_law_constants(int n, double p, double M = 1.0) {
  const auto [lo, hi] = admissible_power_range(n);
  if (!(p > lo && p < hi)) {
    std::ostringstream msg;
    msg << "exponent p = " << p << " outside the open range (1 - 1/sqrt(n), 1) = (" << lo << ", "
        << hi << ") for n = " << n << (p == 1.0 ? "; use the identity family for p = 1" : "");
    throw DomainError(msg.str());
  }
  if (M > 1.0 + 1e-12) throw DomainError("power-law constants assume M <= 1; rescale u by its sup first");
  const double rn = std::sqrt(static_cast<double>(n));
  return PowerLawConstants{rn * (p - 1.0 + 1.0 / rn), p / (2.0 * (1.0 - p)), 2.0 * (1.0 - p), 0.0,
                           std::pow(2.0, 1.0 / (1.0 - p))};
}

}  // namespace elab
