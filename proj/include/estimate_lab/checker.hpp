#pragma once

// Pointwise certification of the gradient estimates on discrete scenarios.
// Every check records a signed slack per node (positive means the inequality
// holds) and, where the inequality carries a free constant, the smallest
// constant that makes it hold on the grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "estimate_lab/error.hpp"
#include "estimate_lab/estimator.hpp"
#include "estimate_lab/fields.hpp"
#include "estimate_lab/nonlinearity.hpp"
#include "estimate_lab/parallel.hpp"
#include "estimate_lab/scenario.hpp"

namespace elab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct NodeRecord {
  std::size_t node = 0, j = 0;
  double x = 0.0, y = 0.0, t = 0.0;
  double lhs = 0.0, rhs = 0.0, margin = 0.0;
  std::optional<Regime> regime;
};

struct CheckReport {
  std::string name;
  double worst_margin = kInf;  // min over nodes of the signed slack
  std::size_t violations = 0;
  std::optional<double> C_emp;
  double tol = 0.0;
  double h = 0.0, dt = 0.0;
  std::size_t nodes_checked = 0, nodes_skipped = 0;
  std::vector<NodeRecord> nodes;
  std::vector<std::pair<std::string, double>> scalars;
  std::vector<std::string> notes;
  bool pass = false;
  bool premise_ok = true;

  void add(std::string key, double value) { scalars.emplace_back(std::move(key), value); }
  std::optional<double> scalar(const std::string& key) const {
    for (const auto& [k, v] : scalars)
      if (k == key) return v;
    return std::nullopt;
  }

  /// Recounts violations against tol; pass iff none. Extra conditions may
  /// still clear pass afterwards.
  void finalize() {
    worst_margin = kInf;
    violations = 0;
    for (const auto& r : nodes) {
      worst_margin = std::min(worst_margin, r.margin);
      if (r.margin < -tol) ++violations;
    }
    nodes_checked = nodes.size();
    pass = violations == 0;
  }
};

/// tol = A h^2 + B dt.
struct TolModel {
  double A = 0.0, B = 0.0;
  double operator()(double h, double dt) const { return A * h * h + B * dt; }
};

namespace detail {

inline NodeRecord record(const SpaceTimeField& grid, std::size_t node, std::size_t j, double lhs, double rhs,
                         double margin) {
  const Point p = grid.domain().coord(node);
  NodeRecord r;
  r.node = node;
  r.j = j;
  r.x = p[0];
  r.y = p[1];
  r.t = grid.times()[j];
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = margin;
  return r;
}

inline CheckReport start(std::string name, const Scenario& sc) {
  CheckReport rep;
  rep.name = std::move(name);
  rep.h = sc.domain->h();
  rep.dt = sc.u.dt();
  return rep;
}

/// Smallest C >= 0 with pass(C), for pass monotone in C. Relative width 1e-10;
/// +inf when nothing up to 1e15 passes.
template <class Pred>
double bisect_constant(Pred&& pass) {
  if (pass(0.0)) return 0.0;
  double hi = 1.0;
  while (!pass(hi)) {
    hi *= 2.0;
    if (hi > 1e15) return kInf;
  }
  double lo = hi == 1.0 ? 0.0 : hi / 2.0;
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    (pass(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// max over samples of (lhs - offset) / slope, clipped at 0: the least C with
/// lhs <= offset + C slope everywhere. Ratios are rounded up by a few ulps so
/// the bound re-evaluated at C holds at the tight node despite reassociation.
struct LinearFit {
  double C = 0.0;
  void add(double lhs, double offset, double slope) {
    const double excess = lhs - offset;
    if (excess <= 0.0) return;
    C = slope > 0.0 ? std::max(C, excess / slope * (1.0 + 8.0 * std::numeric_limits<double>::epsilon())) : kInf;
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Lemma-level differential inequality for the barrier.

/// At interior nodes and interior times, with v = ln u and g = G(e^v):
///   LHS = (a g'(v) Lap w - w_t) / 2
///   RHS = a kappa (xi - g) w^2 + a lambda <grad w, grad g> - mu w - gamma |grad g| / (xi - g)^2
/// and margin LHS - RHS. kappa is the smallest sampled value of
/// 1 - sqrt(n)|F''|s/F', the most demanding admissible choice.
inline CheckReport check_lemma21(const Scenario& sc, const TolModel& tol = {}) {
  const Domain& d = *sc.domain;
  const int n = d.dim();
  const auto hyp = check_hypotheses(sc.nl, n);
  if (!hyp.all_satisfied) throw HypothesisViolation(hyp.failing_condition());
  const double kappa = hyp.kappa_min;
  const Barrier b = compute_barrier(sc);
  const StructuralConstants st = compute_structural(sc);

  CheckReport rep = detail::start("lemma21", sc);
  rep.tol = tol(rep.h, rep.dt);
  rep.add("kappa", kappa);
  rep.add("mu", st.mu);
  rep.add("gamma", st.gamma);

  // Lap w at a node reads w at its neighbours; w at a boundary node carries a
  // one-sided gradient whose O(h^2) error Lap w would amplify to O(1).
  auto interior = [&](std::size_t i) { return d.in_ball(i) && !d.on_boundary(i); };
  auto usable = [&](std::size_t i) {
    if (!interior(i)) return false;
    if (d.kind() == DomainKind::cartesian2d) {
      const std::size_t ix = d.ix(i), iy = d.iy(i);
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          if (!interior(d.index(ix + dx, iy + dy))) return false;
      return true;
    }
    const std::size_t ix = d.ix(i);
    if (d.kind() == DomainKind::radial && ix == 0) return interior(1);
    return interior(ix - 1) && interior(ix + 1);
  };

  const std::size_t last = sc.u.time_count() - 1;
  for (std::size_t j = 0; j <= last; ++j) {
    std::vector<std::optional<NodeRecord>> slice(d.size());
    parallel_for(d.size(), [&](std::size_t i) {
      if (!d.in_ball(i) || j == 0 || j == last || !usable(i)) return;
      const double s = sc.u(i, j);
      const double r = std::log(s);
      const double a = sc.a_at(i, j);
      const double g1 = sc.nl.dF(s);
      const double gap = b.gap(i, j);
      const double w = b.w(i, j);
      const double lambda = eval_lambda(sc.nl, r, n);
      const Vec du = gradient(sc.u, i, j);
      const Vec dg{{g1 * du.c[0] / s, g1 * du.c[1] / s}};
      const Vec dw = gradient(b.w, i, j);
      const double lhs = 0.5 * (a * g1 * laplacian(b.w, i, j) - time_derivative(b.w, i, j));
      const double rhs = a * kappa * gap * w * w + a * lambda * dw.dot(dg) - st.mu * w -
                         st.gamma * dg.norm() / (gap * gap);
      slice[i] = detail::record(b.w, i, j, lhs, rhs, lhs - rhs);
    });
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!d.in_ball(i)) continue;
      if (slice[i]) rep.nodes.push_back(*slice[i]);
      else ++rep.nodes_skipped;
    }
  }
  rep.finalize();
  if (st.third_order_degraded) rep.notes.push_back("gamma3 used a first-order third-derivative stencil");
  return rep;
}

struct RefinementStudy {
  std::string name;
  std::vector<CheckReport> levels;
  std::vector<double> worst_violation;  // max(0, -worst margin) per level
  std::vector<double> cauchy;           // max |m_k - m_{k+1}| on shared nodes
  double violation_order = kInf;        // log2 of the last violation ratio
  double cauchy_order = 0.0;            // log2 of the last Cauchy ratio
  std::vector<double> C_emp;
  TolModel tol;
  bool pass = false;
};

namespace detail {

/// Largest margin difference at nodes shared by a grid and its halving
/// (fine node 2i, fine slice 2j).
inline double cauchy_gap(const CheckReport& coarse, const CheckReport& fine, const Domain& dc, const Domain& df,
                         std::size_t fine_times) {
  std::vector<double> fine_margin(df.size() * fine_times, std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : fine.nodes) fine_margin[r.j * df.size() + r.node] = r.margin;
  double worst = 0.0;
  for (const auto& r : coarse.nodes) {
    const std::size_t fi = df.index(2 * dc.ix(r.node), dc.axes() == 2 ? 2 * dc.iy(r.node) : 0);
    const std::size_t fj = 2 * r.j;
    if (fj >= fine_times) continue;
    const double m = fine_margin[fj * df.size() + fi];
    if (std::isnan(m)) continue;
    worst = std::max(worst, std::abs(m - r.margin));
  }
  return worst;
}

}  // namespace detail

/// Runs check_lemma21 on consecutive halvings. The tolerance is fitted on the
/// first two levels as A = 2 max(v_k / h_k^2) with B = 0 (dt shrinks with h),
/// then reapplied to every level. Passing needs each worst violation to drop
/// by at least `min_ratio` per halving (zeros count as converged), the margin
/// field itself to converge (Cauchy differences shrink by min_ratio), and no
/// violation beyond tol on the finest level.
inline RefinementStudy refine_lemma21(const std::function<Scenario(int)>& level, int count = 3,
                                      double min_ratio = 2.8) {
  if (count < 3) throw DomainError("a refinement study needs at least three levels");
  RefinementStudy study;
  study.name = "lemma21_refinement";
  std::vector<Scenario> scs;
  for (int k = 0; k < count; ++k) {
    scs.push_back(level(k));
    study.levels.push_back(check_lemma21(scs.back()));
    study.worst_violation.push_back(std::max(0.0, -study.levels.back().worst_margin));
  }
  for (int k = 0; k < 2; ++k) {
    const double h = study.levels[k].h;
    study.tol.A = std::max(study.tol.A, 2.0 * study.worst_violation[k] / (h * h));
  }
  for (auto& rep : study.levels) {
    rep.tol = study.tol(rep.h, rep.dt);
    rep.finalize();
  }
  bool ok = true;
  for (int k = 0; k + 1 < count; ++k) {
    const double v0 = study.worst_violation[k], v1 = study.worst_violation[k + 1];
    if (v1 * min_ratio > v0) ok = false;
    study.violation_order = v1 > 0.0 ? std::log2(v0 / v1) : kInf;
    study.cauchy.push_back(detail::cauchy_gap(study.levels[k], study.levels[k + 1], *scs[k].domain,
                                              *scs[k + 1].domain, scs[k + 1].u.time_count()));
  }
  for (std::size_t k = 0; k + 1 < study.cauchy.size(); ++k) {
    const double c0 = study.cauchy[k], c1 = study.cauchy[k + 1];
    study.cauchy_order = c1 > 0.0 ? std::log2(c0 / c1) : kInf;
    if (c1 * min_ratio > c0) ok = false;
  }
  study.pass = ok && study.levels.back().violations == 0;
  return study;
}

// ---------------------------------------------------------------------------
// Global estimate.

/// Quantities every estimate check needs, computed once per scenario.
struct Prepared {
  Barrier barrier;
  StructuralConstants structural;
  ParabolicData parabolic;
};

inline Prepared prepare(const Scenario& sc) {
  Barrier b = compute_barrier(sc);
  const auto s = compute_structural(sc);
  const auto pd = compute_parabolic_data(sc, b);
  return {std::move(b), s, pd};
}

namespace detail {

struct TheoremNode {
  std::size_t node, j;
  double lhs, gap;
  Regime regime;
};

inline std::vector<TheoremNode> theorem_nodes(const Scenario& sc, const Prepared& pre, double rho, double delta) {
  std::vector<TheoremNode> out;
  const Domain& d = *sc.domain;
  for (std::size_t j = 0; j < sc.u.time_count(); ++j)
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d.in_ball(i))
        out.push_back({i, j, pre.barrier.norm(i, j), pre.barrier.gap(i, j),
                       RegimeBound::classify(sc.u, rho, delta, i, j)});
  return out;
}

inline bool theorem_holds(const std::vector<TheoremNode>& nodes, const RegimeBound& rb, double tol) {
  for (const auto& n : nodes)
    if (n.lhs - (rb.C_cal * rb.C_scalar + rb.beta(n.regime)) * n.gap > tol) return false;
  return true;
}

}  // namespace detail

/// F'(u)|grad u|/u <= (C C_scalar + Z(x, t)) (xi - G(u)) on the whole window.
inline CheckReport check_theorem(const Scenario& sc, const Prepared& pre, double rho, double delta, double C_cal,
                                 double tol = 0.0) {
  const RegimeBound rb = make_regime_bound(sc.domain->R(), sc.T, sc.domain->k(), pre.structural, pre.parabolic,
                                           rho, delta, C_cal);
  CheckReport rep = detail::start("theorem", sc);
  rep.tol = tol;
  for (const auto& n : detail::theorem_nodes(sc, pre, rho, delta)) {
    const double rhs = (C_cal * rb.C_scalar + rb.beta(n.regime)) * n.gap;
    auto r = detail::record(sc.u, n.node, n.j, n.lhs, rhs, rhs - n.lhs);
    r.regime = n.regime;
    rep.nodes.push_back(r);
  }
  rep.finalize();
  rep.add("C_cal", C_cal);
  rep.add("rho", rho);
  rep.add("delta", delta);
  rep.add("C_scalar", rb.C_scalar);
  rep.add("T_scalar", rb.T_scalar);
  rep.add("S_scalar", rb.S_scalar);
  rep.add("tau_u", rb.tau_u);
  rep.add("sigma_u", rb.sigma_u);
  rep.add("beta1", rb.beta1);
  rep.add("beta2", rb.beta2);
  rep.add("beta3", rb.beta3);
  rep.add("iota", rb.iota);
  rep.add("mu", pre.structural.mu);
  rep.add("gamma", pre.structural.gamma);
  return rep;
}

inline CheckReport check_theorem(const Scenario& sc, double rho, double delta, double C_cal, double tol = 0.0) {
  return check_theorem(sc, prepare(sc), rho, delta, C_cal, tol);
}

/// Least C at which check_theorem passes with zero tolerance. The right side
/// is nondecreasing in C, so bisection applies. 0 when the left side
/// vanishes; +inf when no finite C works.
inline double empirical_constant(const Scenario& sc, const Prepared& pre, double rho, double delta) {
  const auto nodes = detail::theorem_nodes(sc, pre, rho, delta);
  const double R = sc.domain->R(), k = sc.domain->k();
  return detail::bisect_constant([&](double C) {
    return detail::theorem_holds(nodes, make_regime_bound(R, sc.T, k, pre.structural, pre.parabolic, rho, delta, C),
                                 0.0);
  });
}

inline double empirical_constant(const Scenario& sc, double rho, double delta) {
  return empirical_constant(sc, prepare(sc), rho, delta);
}

// ---------------------------------------------------------------------------
// Local estimate on the half cylinder.

/// Bracket sqrt(mu) + gamma^(1/3) + 1/R + 1/sqrt(T) + k+^(1/4)/sqrt(R).
inline double local_bracket(const StructuralConstants& s, double R, double T, double k) {
  return std::sqrt(s.mu) + std::cbrt(s.gamma) + 1.0 / R + 1.0 / std::sqrt(T) +
         std::pow(std::max(k, 0.0), 0.25) / std::sqrt(R);
}

/// Bracket sqrt(mu) + gamma^(1/3) + sigma + tau, the variant that keeps the
/// parabolic data.
inline double sharper_bracket(const StructuralConstants& s, const ParabolicData& pd) {
  return std::sqrt(s.mu) + std::cbrt(s.gamma) + pd.sigma_u + pd.tau_u;
}

/// Local bound on Q_{R/2,T/2}. C_cal absent means: use the empirical constant.
/// Also records the sharper variant and checks the regime scalars against
/// their closed forms at rho = R/2, delta = T/2.
inline CheckReport check_corollary(const Scenario& sc, const Prepared& pre, std::optional<double> C_cal = {},
                                   double tol = 0.0) {
  const Domain& d = *sc.domain;
  const double R = d.R(), T = sc.T, k = d.k();
  const Region half = Region::half(d, T);
  const double K = local_bracket(pre.structural, R, T, k);
  const double Ks = sharper_bracket(pre.structural, pre.parabolic);

  detail::LinearFit fit, fit_sharp;
  std::size_t sharper_wins = 0, inner = 0;
  for (std::size_t j = 0; j < sc.u.time_count(); ++j)
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!half.contains(sc.u, i, j)) continue;
      const double lhs = pre.barrier.norm(i, j), gap = pre.barrier.gap(i, j);
      fit.add(lhs, 0.0, K * gap);
      fit_sharp.add(lhs, 0.0, Ks * gap);
      ++inner;
      if (Ks * gap < K * gap) ++sharper_wins;
    }
  if (inner == 0) throw DomainError("Q_{R/2,T/2} contains no grid node");
  const double C = C_cal.value_or(fit.C);

  CheckReport rep = detail::start("corollary", sc);
  rep.tol = tol;
  rep.C_emp = fit.C;
  for (std::size_t j = 0; j < sc.u.time_count(); ++j)
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!half.contains(sc.u, i, j)) continue;
      const double lhs = pre.barrier.norm(i, j);
      const double rhs = C * K * pre.barrier.gap(i, j);
      rep.nodes.push_back(detail::record(sc.u, i, j, lhs, rhs, rhs - lhs));
    }
  rep.finalize();

  const RegimeBound rb = make_regime_bound(R, T, k, pre.structural, pre.parabolic, 0.5 * R, 0.5 * T, 1.0);
  const double T_expected = std::sqrt(2.0 / T);
  const double S_expected = 4.0 / R + std::sqrt(2.0) * std::pow(std::max(k, 0.0), 0.25) / std::sqrt(R);
  const double T_err = std::abs(rb.T_scalar - T_expected), S_err = std::abs(rb.S_scalar - S_expected);
  rep.add("C_cal", C);
  rep.add("bracket", K);
  rep.add("sharper_bracket", Ks);
  rep.add("sharper_C_emp", fit_sharp.C);
  rep.add("sharper_fraction", static_cast<double>(sharper_wins) / static_cast<double>(inner));
  rep.add("T_scalar", rb.T_scalar);
  rep.add("S_scalar", rb.S_scalar);
  rep.add("T_scalar_error", T_err);
  rep.add("S_scalar_error", S_err);
  if (T_err > 1e-12 || S_err > 1e-12) {
    rep.pass = false;
    rep.notes.push_back("regime scalars disagree with their closed forms at rho = R/2, delta = T/2");
  }
  if (!std::isfinite(fit.C)) rep.pass = false;
  return rep;
}

inline CheckReport check_corollary(const Scenario& sc, std::optional<double> C_cal = {}, double tol = 0.0) {
  return check_corollary(sc, prepare(sc), C_cal, tol);
}

// ---------------------------------------------------------------------------
// Regional bounds for w and their recombination.

struct RegimeLemmaReports {
  CheckReport inner_all;    // w <= tau^2 + C (C~ + S~)
  CheckReport ball_late;    // w <= sigma^2 + C (C~ + T~)
  CheckReport ball_all;     // w <= sigma^2 + tau^2 + C C~
  CheckReport inner_late;   // w <= C (C~ + S~ + T~)
  CheckReport combination;  // per-node min of the applicable bounds at a common C
  CheckReport recomposition;  // sqrt of the combination <= the global bound at sqrt(C)

  std::vector<const CheckReport*> all() const {
    return {&inner_all, &ball_late, &ball_all, &inner_late, &combination, &recomposition};
  }
  bool pass() const {
    for (const auto* r : all())
      if (!r->pass) return false;
    return true;
  }
};

namespace detail {

struct RegionalBound {
  std::string name;
  Region region;
  double offset;  // constant part
  double slope;   // multiplies C
};

inline CheckReport check_regional(const Scenario& sc, const Prepared& pre, const RegionalBound& rb, double tol) {
  const SpaceTimeField& w = pre.barrier.w;
  LinearFit fit;
  for (std::size_t j = 0; j < w.time_count(); ++j)
    for (std::size_t i = 0; i < w.node_count(); ++i)
      if (rb.region.contains(w, i, j)) fit.add(w(i, j), rb.offset, rb.slope);
  CheckReport rep = start(rb.name, sc);
  rep.tol = tol;
  rep.C_emp = fit.C;
  const double C = std::isfinite(fit.C) ? fit.C : 0.0;
  for (std::size_t j = 0; j < w.time_count(); ++j)
    for (std::size_t i = 0; i < w.node_count(); ++i) {
      if (!rb.region.contains(w, i, j)) continue;
      const double rhs = rb.offset + C * rb.slope;
      rep.nodes.push_back(record(w, i, j, w(i, j), rhs, rhs - w(i, j)));
    }
  if (rep.nodes.empty()) throw DomainError("region " + rb.region.name() + " contains no grid node");
  rep.finalize();
  rep.add("offset", rb.offset);
  rep.add("slope", rb.slope);
  if (!std::isfinite(fit.C)) rep.pass = false;
  return rep;
}

}  // namespace detail

/// The four regional bounds, each with its own least constant. The
/// combination takes C as the largest of the four, so every regional bound
/// holds at that C; at each node the smallest bound whose region contains the
/// node must still dominate w. Recomposition checks that the square root of
/// that combination sits below the global bound with calibration sqrt(C),
/// node by node.
inline RegimeLemmaReports check_regime_lemmas(const Scenario& sc, const Prepared& pre, double rho, double delta,
                                              double tol = 0.0) {
  const Domain& d = *sc.domain;
  const RegimeBound rb = make_regime_bound(d.R(), sc.T, d.k(), pre.structural, pre.parabolic, rho, delta, 1.0);
  const double tau2 = rb.tau_u * rb.tau_u, sigma2 = rb.sigma_u * rb.sigma_u;
  using SR = SpatialRegion;
  using TR = TemporalRegion;
  RegimeLemmaReports out;
  out.inner_all = detail::check_regional(
      sc, pre, {"regime_inner", {SR::inner, TR::all, rho, delta}, tau2, rb.C_sq + rb.S_sq}, tol);
  out.ball_late = detail::check_regional(
      sc, pre, {"regime_late", {SR::ball, TR::late, rho, delta}, sigma2, rb.C_sq + rb.T_sq}, tol);
  out.ball_all = detail::check_regional(
      sc, pre, {"regime_data", {SR::ball, TR::all, rho, delta}, sigma2 + tau2, rb.C_sq}, tol);
  out.inner_late = detail::check_regional(
      sc, pre, {"regime_interior", {SR::inner, TR::late, rho, delta}, 0.0, rb.C_sq + rb.S_sq + rb.T_sq}, tol);

  double C = 0.0;
  for (const auto* r : {&out.inner_all, &out.ball_late, &out.ball_all, &out.inner_late})
    if (std::isfinite(*r->C_emp)) C = std::max(C, *r->C_emp);

  auto combined = [&](Regime r) {
    double extra = 0.0;
    switch (r) {
      case Regime::B3: extra = sigma2 + tau2; break;
      case Regime::B1: extra = tau2 + std::min(sigma2, C * rb.S_sq); break;
      case Regime::B2: extra = sigma2 + std::min(tau2, C * rb.T_sq); break;
      case Regime::I:
        extra = std::min({sigma2 + tau2, sigma2 + C * rb.T_sq, tau2 + C * rb.S_sq, C * (rb.T_sq + rb.S_sq)});
        break;
    }
    return C * rb.C_sq + extra;
  };
  const RegimeBound root = make_regime_bound(d.R(), sc.T, d.k(), pre.structural, pre.parabolic, rho, delta,
                                             std::sqrt(C));

  out.combination = detail::start("regime_combination", sc);
  out.combination.tol = tol;
  out.combination.C_emp = C;
  out.recomposition = detail::start("regime_recomposition", sc);
  out.recomposition.C_emp = std::sqrt(C);
  const SpaceTimeField& w = pre.barrier.w;
  for (std::size_t j = 0; j < w.time_count(); ++j)
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!d.in_ball(i)) continue;
      const Regime r = RegimeBound::classify(w, rho, delta, i, j);
      const double bound = combined(r);
      auto rec = detail::record(w, i, j, w(i, j), bound, bound - w(i, j));
      rec.regime = r;
      out.combination.nodes.push_back(rec);
      const double root_bound = root.C_cal * root.C_scalar + root.beta(r);
      const double lhs = std::sqrt(bound);
      auto rec2 = detail::record(w, i, j, lhs, root_bound, root_bound - lhs);
      rec2.regime = r;
      out.recomposition.nodes.push_back(rec2);
    }
  out.combination.finalize();
  // only rounding separates the two sides where they touch
  out.recomposition.tol = 1e-12 * std::max(1.0, root.C_cal * root.C_scalar + root.beta3 + root.iota);
  out.recomposition.finalize();
  return out;
}

inline RegimeLemmaReports check_regime_lemmas(const Scenario& sc, double rho, double delta, double tol = 0.0) {
  return check_regime_lemmas(sc, prepare(sc), rho, delta, tol);
}

// ---------------------------------------------------------------------------
// Porous medium specialisation.

/// u / M on the same nodes, time window shrunk to M^(p-1) T around t0.
inline Scenario rescale_porous(const Scenario& sc, double M) {
  const double p = sc.nl.exponent();
  Scenario out = sc;
  out.T = std::pow(M, p - 1.0) * sc.T;
  out.u = SpaceTimeField(sc.domain, sc.t0, out.T, sc.u.time_count() - 1);
  for (std::size_t j = 0; j < sc.u.time_count(); ++j)
    for (std::size_t i = 0; i < sc.domain->size(); ++i) out.u(i, j) = sc.u(i, j) / M;
  out.nl = sc.nl.with_bound(1.0);
  out.M = sc.M / M;
  out.floor = sc.floor / M;
  out.target.reset();
  if (sc.target) out.target = sc.target->rescaled(M, p, sc.t0);
  out.label = sc.label + "/rescaled";
  out.residual = discrete_residual(out);
  return out;
}

/// Stages: (i) the rescaled field solves the same equation with residual
/// scaled by M^-p; (ii) |grad u|/u <= C (1/R + M^((1-p)/2)/sqrt(T) + sqrt(k+))
/// on Q_{R/2,T/2}; (iii) the finite-s0 form
///   (1-p) |grad u~|/u~ / (1 - (u~/s0)^(1-p))
/// has least constants that decrease with s0 toward (1-p) times the stage (ii)
/// constant.
inline CheckReport check_appendixA(const Scenario& sc, double M, const std::vector<double>& s0_values = {16, 64, 256}) {
  const Domain& d = *sc.domain;
  if (sc.nl.family() != Family::power) throw DomainError("porous medium check needs a power nonlinearity");
  const double p = sc.nl.exponent();
  const auto [lo, hi] = admissible_power_range(d.dim());
  if (!(p > lo && p < hi))
    throw DomainError("p = " + std::to_string(p) + " outside the admissible range (" + std::to_string(lo) + ", " +
                      std::to_string(hi) + ")");
  if (sc.H.kind != SourceTerm::Kind::zero) throw DomainError("porous medium check needs H = 0");
  if (sc.a.kind != DiffusionCoefficient::Kind::constant || sc.a.level != 1.0)
    throw DomainError("porous medium check needs a = 1");
  if (!(M >= sc.M * (1.0 - 1e-12))) throw DomainError("M must bound u from above");

  CheckReport rep = detail::start("appendixA", sc);
  const Scenario tilde = rescale_porous(sc, M);
  const double allowed = std::pow(M, -p) * sc.residual * (1.0 + 1e-8) + 1e-10;
  rep.add("time_dilation", std::pow(M, 1.0 - p));
  rep.add("residual", sc.residual);
  rep.add("rescaled_residual", tilde.residual);
  rep.add("rescaled_residual_allowed", allowed);
  const bool residual_ok = tilde.residual <= allowed;

  const double R = d.R(), T = sc.T;
  const double bracket = 1.0 / R + std::pow(M, 0.5 * (1.0 - p)) / std::sqrt(T) + std::sqrt(d.k_plus());
  const Region half = Region::half(d, T);
  detail::LinearFit fit;
  std::vector<detail::LinearFit> sweep(s0_values.size());
  for (std::size_t j = 0; j < sc.u.time_count(); ++j)
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!half.contains(sc.u, i, j)) continue;
      const double ratio = gradient(sc.u, i, j).norm() / sc.u(i, j);
      fit.add(ratio, 0.0, bracket);
      for (std::size_t s = 0; s < s0_values.size(); ++s) {
        const double ut = sc.u(i, j) / M;
        sweep[s].add((1.0 - p) * ratio / (1.0 - std::pow(ut / s0_values[s], 1.0 - p)), 0.0, bracket);
      }
    }
  rep.C_emp = fit.C;
  for (std::size_t j = 0; j < sc.u.time_count(); ++j)
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!half.contains(sc.u, i, j)) continue;
      const double lhs = gradient(sc.u, i, j).norm() / sc.u(i, j);
      const double rhs = fit.C * bracket;
      rep.nodes.push_back(detail::record(sc.u, i, j, lhs, rhs, rhs - lhs));
    }
  rep.finalize();
  rep.add("bracket", bracket);

  const double limit = (1.0 - p) * fit.C;
  bool sweep_ok = std::isfinite(fit.C);
  double prev = kInf, prev_gap = kInf;
  for (std::size_t s = 0; s < s0_values.size(); ++s) {
    const double c = sweep[s].C;
    rep.add("s0_" + std::to_string(static_cast<long long>(std::lround(s0_values[s]))) + "_C_emp", c);
    if (c > prev * 1.05 || c < 0.95 * limit) sweep_ok = false;
    const double gap = std::abs(c - limit);
    if (gap > prev_gap * 1.05 + 1e-15) sweep_ok = false;
    prev = c;
    prev_gap = gap;
  }
  rep.add("s0_limit_C_emp", limit);
  if (!residual_ok) rep.notes.push_back("rescaled residual exceeds M^-p times the original");
  if (!sweep_ok) rep.notes.push_back("finite-s0 constants do not approach the limit monotonically");
  rep.pass = rep.pass && residual_ok && sweep_ok;
  return rep;
}

// ---------------------------------------------------------------------------
// Gradient-dependent source epsilon |grad u|^q.

/// Sup of |grad u|/u and |D^2 u|/u^(3-p-q) on the whole window, then
///   |grad u|/u <= C (sqrt(k+) (M/m)^((1-p)/2)
///                    + eps^(1/3) M^((2-2p)/3) F^((q-1)/3) H^(1/3)
///                    + 1/R + M^((1-p)/2)/sqrt(T) + k+^(1/4)/sqrt(R))
/// on Q_{R/2,T/2}.
inline CheckReport check_appendixB(const Scenario& sc) {
  const Domain& d = *sc.domain;
  if (sc.H.kind != SourceTerm::Kind::gradient_power) throw DomainError("gradient-source check needs H = eps |grad u|^q");
  if (sc.nl.family() != Family::power) throw DomainError("gradient-source check needs a power nonlinearity");
  const double p = sc.nl.exponent(), q = sc.H.q, eps = sc.H.epsilon;
  const auto [lo, hi] = admissible_power_range(d.dim());
  if (!(p > lo && p < hi)) throw DomainError("p = " + std::to_string(p) + " outside the admissible range");
  if (!(q > 1.0 && q < 4.0)) throw DomainError("q must lie in (1, 4); got " + std::to_string(q));
  const double m = sc.floor, M = sc.nl.M();
  if (!(m > 0.0)) throw DomainError("gradient-source check needs a positive lower bound m");

  double Fsup = 0.0, Hsup = 0.0;
  for (std::size_t j = 0; j < sc.u.time_count(); ++j)
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!d.in_ball(i)) continue;
      const double s = sc.u(i, j);
      Fsup = std::max(Fsup, gradient(sc.u, i, j).norm() / s);
      Hsup = std::max(Hsup, hessian(sc.u, i, j).norm() / std::pow(s, 3.0 - p - q));
    }
  const double R = d.R(), T = sc.T, kp = d.k_plus();
  const double bracket = std::sqrt(kp) * std::pow(M / m, 0.5 * (1.0 - p)) +
                         std::cbrt(eps) * std::pow(M, (2.0 - 2.0 * p) / 3.0) * std::pow(Fsup, (q - 1.0) / 3.0) *
                             std::cbrt(Hsup) +
                         1.0 / R + std::pow(M, 0.5 * (1.0 - p)) / std::sqrt(T) + std::pow(kp, 0.25) / std::sqrt(R);

  const Region half = Region::half(d, T);
  detail::LinearFit fit;
  for (std::size_t j = 0; j < sc.u.time_count(); ++j)
    for (std::size_t i = 0; i < d.size(); ++i)
      if (half.contains(sc.u, i, j)) fit.add(gradient(sc.u, i, j).norm() / sc.u(i, j), 0.0, bracket);

  CheckReport rep = detail::start("appendixB", sc);
  rep.C_emp = fit.C;
  for (std::size_t j = 0; j < sc.u.time_count(); ++j)
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!half.contains(sc.u, i, j)) continue;
      const double lhs = gradient(sc.u, i, j).norm() / sc.u(i, j);
      const double rhs = fit.C * bracket;
      rep.nodes.push_back(detail::record(sc.u, i, j, lhs, rhs, rhs - lhs));
    }
  rep.finalize();
  rep.add("epsilon", eps);
  rep.add("q", q);
  rep.add("m", m);
  rep.add("M", M);
  rep.add("F_sup", Fsup);
  rep.add("H_sup", Hsup);
  rep.add("bracket", bracket);
  if (!std::isfinite(fit.C) || !std::isfinite(Fsup) || !std::isfinite(Hsup)) rep.pass = false;
  return rep;
}

// ---------------------------------------------------------------------------
// Decay of the normalised gradient on growing windows.

/// For each R, builds the window B_R x [-R^2, 0] and measures
/// R sup_{B_{R/2} x [-R^2/2, 0]} |grad u|/u, which must be nonincreasing in R
/// within `slack`. A family that cannot be built (RangeError, u leaving its
/// bounds) breaks the premise: reported, not counted as a failure.
inline CheckReport check_liouville_decay(const std::function<Scenario(double)>& family,
                                         const std::vector<double>& radii = {1, 2, 4, 8}, double slack = 0.10) {
  CheckReport rep;
  rep.name = "liouville";
  std::vector<double> scaled, sups;
  double bound = 0.0;
  for (double R : radii) {
    Scenario sc;
    try {
      sc = family(R);
    } catch (const RangeError& e) {
      rep.premise_ok = false;
      rep.pass = true;
      rep.notes.push_back(std::string("premise violated: ") + e.what());
      return rep;
    }
    const Domain& d = *sc.domain;
    if (sc.H.kind != SourceTerm::Kind::zero || sc.a.depends_on_space() || sc.a.depends_on_u() || d.k() != 0.0)
      throw DomainError("decay check needs H = 0, a = a(t) and k = 0");
    bound = std::max(bound, sc.M);
    const double sup =
        sup_over(sc.u, Region::half(d, sc.T), [&](std::size_t i, std::size_t j) {
          return gradient(sc.u, i, j).norm() / sc.u(i, j);
        });
    sups.push_back(sup);
    scaled.push_back(R * sup);
    rep.h = d.h();
    rep.dt = sc.u.dt();
    rep.add("R_" + std::to_string(static_cast<long long>(std::lround(R))) + "_scaled_sup", R * sup);
    double grad_sup = 0.0;
    for (std::size_t j = 0; j < sc.u.time_count(); ++j)
      for (std::size_t i = 0; i < d.size(); ++i)
        if (Region::half(d, sc.T).contains(sc.u, i, j)) grad_sup = std::max(grad_sup, gradient(sc.u, i, j).norm());
    rep.add("R_" + std::to_string(static_cast<long long>(std::lround(R))) + "_gradient_sup", grad_sup);
  }
  rep.add("sup_u", bound);
  bool ok = true;
  for (std::size_t k = 0; k + 1 < scaled.size(); ++k) {
    const double margin = scaled[k] * (1.0 + slack) - scaled[k + 1];
    NodeRecord r;
    r.x = radii[k + 1];
    r.lhs = scaled[k + 1];
    r.rhs = scaled[k] * (1.0 + slack);
    r.margin = margin;
    rep.nodes.push_back(r);
    if (margin < 0.0) ok = false;
  }
  // least-squares slope of log sup against log(1/R)
  if (sups.size() >= 2 && std::all_of(sups.begin(), sups.end(), [](double s) { return s > 0.0; })) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(sups.size());
    for (std::size_t k = 0; k < sups.size(); ++k) {
      const double x = -std::log(radii[k]), y = std::log(sups[k]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    rep.add("decay_slope", (n * sxy - sx * sy) / (n * sxx - sx * sx));
  }
  rep.finalize();
  rep.pass = ok;
  return rep;
}

}  // namespace elab
