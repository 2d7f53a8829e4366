#pragma once

// Solutions u of u_t = a(x,t,u) Delta F(u) + H together with a, F and H.
// Manufactured scenarios pick an analytic target and define H as its
// residual; forward scenarios integrate the equation with explicit Euler.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "estimate_lab/error.hpp"
#include "estimate_lab/fields.hpp"
#include "estimate_lab/geometry.hpp"
#include "estimate_lab/jet.hpp"
#include "estimate_lab/nonlinearity.hpp"
#include "estimate_lab/parallel.hpp"

namespace elab {

/// Analytic solution family u(x, y, t) with derivatives through order 3 in
/// space and 1 in time, obtained by evaluating one generic expression on jets.
class Target {
 public:
  template <class Fn>
  static Target make(std::string name, Fn fn) {
    Target t;
    t.name_ = std::move(name);
    t.eval2_ = [fn](const Jet<2>& x, const Jet<2>& y, const Jet<2>& s) { return fn(x, y, s); };
    t.eval3_ = [fn](const Jet<3>& x, const Jet<3>& y, const Jet<3>& s) { return fn(x, y, s); };
    return t;
  }

  const std::string& name() const { return name_; }

  template <int Order>
  Jet<Order> jet(const Point& p, double t) const {
    const auto x = Jet<Order>::variable(p[0], JetVar::x);
    const auto y = Jet<Order>::variable(p[1], JetVar::y);
    const auto s = Jet<Order>::variable(t, JetVar::t);
    if constexpr (Order == 2) return eval2_(x, y, s);
    else if constexpr (Order == 3) return eval3_(x, y, s);
    else static_assert(Order == 2 || Order == 3, "targets expose order 2 and 3 jets");
  }
  double value(const Point& p, double t) const { return eval2_(Jet<2>(p[0]), Jet<2>(p[1]), Jet<2>(t)).value(); }

  /// u(x, t0 + c (t - t0)) / M with c = M^(1-p): the normalisation that maps a
  /// solution of u_t = Delta u^p bounded by M to one bounded by 1.
  Target rescaled(double M, double p, double t0) const {
    const double c = std::pow(M, 1.0 - p);
    Target out;
    out.name_ = name_ + "/rescaled";
    auto e2 = eval2_;
    auto e3 = eval3_;
    out.eval2_ = [e2, c, t0, M](const Jet<2>& x, const Jet<2>& y, const Jet<2>& s) {
      return e2(x, y, t0 + c * (s - t0)) * (1.0 / M);
    };
    out.eval3_ = [e3, c, t0, M](const Jet<3>& x, const Jet<3>& y, const Jet<3>& s) {
      return e3(x, y, t0 + c * (s - t0)) * (1.0 / M);
    };
    return out;
  }

 private:
  std::string name_;
  std::function<Jet<2>(const Jet<2>&, const Jet<2>&, const Jet<2>&)> eval2_;
  std::function<Jet<3>(const Jet<3>&, const Jet<3>&, const Jet<3>&)> eval3_;
};

/// Where a target lives: number of Cartesian axes that enter |x - c|.
struct TargetFrame {
  int axes = 1;
  Point center{0.0, 0.0};

  static TargetFrame of(const Domain& d) {
    return {d.axes(), d.kind() == DomainKind::radial ? Point{0.0, 0.0} : d.x0()};
  }

  template <class J>
  J radius_sq(const J& x, const J& y) const {
    J dx = x - center[0];
    J r2 = dx * dx;
    if (axes == 2) {
      J dy = y - center[1];
      r2 += dy * dy;
    }
    return r2;
  }
};

namespace targets {

inline Target constant(double c) {
  return Target::make("constant", [c](const auto& x, const auto&, const auto&) {
    using J = std::decay_t<decltype(x)>;
    return J(c);
  });
}

/// amplitude (4 pi (t + shift))^(-dim/2) exp(-|x - c|^2 / (4 (t + shift))) + floor.
/// With dim equal to the Euclidean dimension this solves the heat equation.
inline Target gaussian_floor(TargetFrame frame, int dim, double floor, double shift, double amplitude = 1.0) {
  return Target::make("gaussian_floor", [=](const auto& x, const auto& y, const auto& t) {
    const auto s = t + shift;
    const auto r2 = frame.radius_sq(x, y);
    return amplitude * pow(4.0 * std::numbers::pi * s, -0.5 * dim) * exp(-r2 / (4.0 * s)) + floor;
  });
}

enum class Profile { cosine, sine, flat_bump };
enum class Temporal { steady, decay, emerge };

/// base + amplitude * P(x) * Theta(t).
///   cosine/sine: product over axes of cos/sin(frequency (x_i - c_i))
///   flat_bump:   (1 - |x - c|^2 / support^2)^2, with zero slope at |x - c| = support
///   decay:       exp(-rate t);  emerge: (t - start) / duration
struct SeparableSpec {
  double base = 0.5;
  double amplitude = 0.25;
  Profile profile = Profile::cosine;
  double frequency = 1.0;
  double support = 1.0;
  Temporal temporal = Temporal::decay;
  double rate = 1.0;
  double start = 0.0;
  double duration = 1.0;
};

inline Target separable(TargetFrame frame, SeparableSpec spec) {
  return Target::make("separable", [=](const auto& x, const auto& y, const auto& t) {
    using J = std::decay_t<decltype(x)>;
    J shape(1.0);
    switch (spec.profile) {
      case Profile::cosine:
        shape = cos(spec.frequency * (x - frame.center[0]));
        if (frame.axes == 2) shape = shape * cos(spec.frequency * (y - frame.center[1]));
        break;
      case Profile::sine:
        shape = sin(spec.frequency * (x - frame.center[0]));
        if (frame.axes == 2) shape = shape * sin(spec.frequency * (y - frame.center[1]));
        break;
      case Profile::flat_bump: {
        const J z = J(1.0) - frame.radius_sq(x, y) * (1.0 / (spec.support * spec.support));
        shape = z * z;
        break;
      }
    }
    J factor(1.0);
    switch (spec.temporal) {
      case Temporal::steady: break;
      case Temporal::decay: factor = exp(-spec.rate * t); break;
      case Temporal::emerge: factor = (t - spec.start) * (1.0 / spec.duration); break;
    }
    return spec.base + spec.amplitude * shape * factor;
  });
}

/// 0.5 + 0.25 e^{-t} cos(x - c).
inline Target decaying_cosine(TargetFrame frame) { return separable(frame, SeparableSpec{}); }

/// Fast-diffusion Barenblatt profile solving u_t = Delta u^p (p < 1) in R^dim:
/// t^-alpha (C + k |x|^2 t^(-2 beta))^(-1/(1-p)).
inline Target barenblatt(TargetFrame frame, int dim, double p, double C) {
  if (!(p < 1.0 && p > 0.0)) throw DomainError("Barenblatt profile implemented for 0 < p < 1");
  const double beta = 1.0 / (dim * (p - 1.0) + 2.0);
  if (!(beta > 0.0)) throw DomainError("Barenblatt exponent needs p > (n - 2)/n");
  const double alpha = dim * beta;
  const double kb = (1.0 - p) * beta / (2.0 * p);
  return Target::make("barenblatt", [=](const auto& x, const auto& y, const auto& t) {
    const auto r2 = frame.radius_sq(x, y);
    return pow(t, -alpha) * pow(C + kb * r2 * pow(t, -2.0 * beta), -1.0 / (1.0 - p));
  });
}

/// base + amplitude sin(x / (2 scale)) exp(-t / (4 scale^2)); a heat solution.
inline Target liouville_sine(double scale, double base = 2.0, double amplitude = 1.0) {
  return Target::make("liouville_sine", [=](const auto& x, const auto&, const auto& t) {
    return base + amplitude * sin(x * (0.5 / scale)) * exp(t * (-0.25 / (scale * scale)));
  });
}

}  // namespace targets

/// a(x, t, s) with closed-form partials and the ellipticity bound a0.
struct DiffusionCoefficient {
  enum class Kind { constant, time_sine, tanh_u, space_cosine };
  Kind kind = Kind::constant;
  double level = 1.0;      // constant value
  double amplitude = 0.0;  // 0.5 for time_sine, 0.1 for tanh_u by default
  double a0 = 0.5;
  Point center{0.0, 0.0};

  static DiffusionCoefficient constant(double c = 1.0, double a0 = 0.5) {
    return {Kind::constant, c, 0.0, a0, {0.0, 0.0}};
  }
  static DiffusionCoefficient time_sine(double amplitude = 0.5, double a0 = 0.5) {
    return {Kind::time_sine, 1.0, amplitude, a0, {0.0, 0.0}};
  }
  static DiffusionCoefficient tanh_u(double amplitude = 0.1, double a0 = 0.5) {
    return {Kind::tanh_u, 1.0, amplitude, a0, {0.0, 0.0}};
  }
  static DiffusionCoefficient space_cosine(double amplitude = 0.2, double a0 = 0.5, Point center = {0.0, 0.0}) {
    return {Kind::space_cosine, 1.0, amplitude, a0, center};
  }

  const char* name() const {
    switch (kind) {
      case Kind::constant: return "constant";
      case Kind::time_sine: return "time_sine";
      case Kind::tanh_u: return "tanh_u";
      case Kind::space_cosine: return "space_cosine";
    }
    return "?";
  }

  double operator()(const Point& x, double t, double s) const {
    switch (kind) {
      case Kind::constant: return level;
      case Kind::time_sine: return std::clamp(1.0 + amplitude * std::sin(t), a0, 1.0 / a0);
      case Kind::tanh_u: return 1.0 + amplitude * std::tanh(s);
      case Kind::space_cosine: return 1.0 + amplitude * std::cos(x[0] - center[0]);
    }
    return level;
  }
  double du(const Point&, double, double s) const {
    if (kind != Kind::tanh_u) return 0.0;
    const double th = std::tanh(s);
    return amplitude * (1.0 - th * th);
  }
  Vec dx(const Point& x, double, double) const {
    Vec g;
    if (kind == Kind::space_cosine) g.c[0] = -amplitude * std::sin(x[0] - center[0]);
    return g;
  }
  bool depends_on_space() const { return kind == Kind::space_cosine; }
  bool depends_on_u() const { return kind == Kind::tanh_u; }

  void check_bounds(double value, const std::string& where) const {
    if (!(a0 > 0.0 && a0 <= 1.0)) throw DomainError("a0 must lie in (0, 1]");
    if (value < a0 * (1.0 - 1e-12) || value > (1.0 / a0) * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "diffusion coefficient a = " << value << " outside [a0, 1/a0] = [" << a0 << ", " << 1.0 / a0
          << "] " << where;
      throw HypothesisViolation(msg.str());
    }
  }
};

struct HPartials {
  double du = 0.0;      // partial_u H
  Vec dx;               // partial x-gradient of H
  Vec domega;           // gradient of H in the grad-u slot
  double dOmega = 0.0;  // norm of the derivative in the Hessian slot
};

/// Source term H(x, t, u, omega, Omega).
struct SourceTerm {
  enum class Kind { zero, manufactured, gradient_power };
  Kind kind = Kind::zero;
  // manufactured: tables on the scenario grid
  std::shared_ptr<const SpaceTimeField> table;
  std::shared_ptr<const std::vector<std::vector<Vec>>> gradient_table;
  // gradient_power: epsilon |omega|^q
  double epsilon = 0.0;
  double q = 2.0;

  static SourceTerm zero() { return {}; }
  static SourceTerm gradient_power(double epsilon, double q) {
    if (!(q > 1.0)) throw DomainError("epsilon |grad u|^q needs q > 1 (not C^1 at grad u = 0 otherwise)");
    SourceTerm s;
    s.kind = Kind::gradient_power;
    s.epsilon = epsilon;
    s.q = q;
    return s;
  }

  const char* name() const {
    switch (kind) {
      case Kind::zero: return "zero";
      case Kind::manufactured: return "manufactured";
      case Kind::gradient_power: return "gradient_power";
    }
    return "?";
  }

  double power_value(const Vec& omega) const {
    const double m = omega.norm();
    return m == 0.0 ? 0.0 : epsilon * std::pow(m, q);
  }
  Vec power_gradient(const Vec& omega) const {
    const double m = omega.norm();
    Vec g;
    if (m == 0.0) {
      if (q <= 1.0) throw HypothesisViolation("epsilon |omega|^q is not differentiable at omega = 0 for q <= 1");
      return g;  // one-sided limit
    }
    const double scale = epsilon * q * std::pow(m, q - 2.0);
    g.c = {scale * omega.c[0], scale * omega.c[1]};
    return g;
  }
};

enum class Provenance { manufactured, solved, analytic };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::manufactured: return "manufactured";
    case Provenance::solved: return "solved";
    case Provenance::analytic: return "analytic";
  }
  return "?";
}

struct Scenario {
  std::shared_ptr<const Domain> domain;
  double t0 = 1.0;
  double T = 1.0;
  Nonlinearity nl = Nonlinearity::identity(1.0, 1.0, 1.0);
  DiffusionCoefficient a;
  SourceTerm H;
  SpaceTimeField u;
  Provenance provenance = Provenance::manufactured;
  double M = 1.0;      // sup of u on the grid
  double floor = 0.0;  // inf of u on the grid
  double residual = 0.0;
  std::optional<Target> target;
  std::string label;

  double a_at(std::size_t node, std::size_t j) const { return a(domain->coord(node), u.times()[j], u(node, j)); }

  double H_at(std::size_t node, std::size_t j) const {
    switch (H.kind) {
      case SourceTerm::Kind::zero: return 0.0;
      case SourceTerm::Kind::manufactured: return (*H.table)(node, j);
      case SourceTerm::Kind::gradient_power: return H.power_value(gradient(u, node, j));
    }
    return 0.0;
  }
};

/// Partials of H at a grid node; only the x-gradient of a manufactured source
/// and the gradient slot of epsilon |omega|^q can be nonzero.
inline HPartials eval_H_partials(const Scenario& sc, std::size_t node, std::size_t j) {
  HPartials out;
  switch (sc.H.kind) {
    case SourceTerm::Kind::zero: break;
    case SourceTerm::Kind::manufactured: out.dx = (*sc.H.gradient_table)[j][node]; break;
    case SourceTerm::Kind::gradient_power: out.domega = sc.H.power_gradient(gradient(sc.u, node, j)); break;
  }
  return out;
}

/// Delta F(u) of an analytic target, with the metric of the domain.
inline double analytic_laplacian_F(const Domain& d, const Target& target, const Nonlinearity& nl, Point x,
                                   double t) {
  if (d.kind() == DomainKind::radial) x[0] = std::abs(x[0]);  // radial profiles are even
  const auto u = target.jet<2>(x, t);
  const double s = u.value();
  const auto Fu = u.compose({nl.F(s), nl.dF(s), nl.d2F(s)});
  switch (d.kind()) {
    case DomainKind::segment: return Fu.derivative(2, 0, 0);
    case DomainKind::cartesian2d: return Fu.derivative(2, 0, 0) + Fu.derivative(0, 2, 0);
    case DomainKind::radial: {
      const double r = x[0];
      if (r == 0.0) return d.dim() * Fu.derivative(2, 0, 0);
      return Fu.derivative(2, 0, 0) + (d.dim() - 1) * metric_log_derivative(d, r) * Fu.derivative(1, 0, 0);
    }
  }
  return 0.0;
}

/// H(x, t) = u_t - a(x, t, u) Delta F(u) for an analytic target.
inline double manufactured_source(const Domain& d, const Target& target, const Nonlinearity& nl,
                                  const DiffusionCoefficient& a, Point x, double t) {
  if (d.kind() == DomainKind::radial) x[0] = std::abs(x[0]);
  const auto u = target.jet<2>(x, t);
  return u.d(JetVar::t) - a(x, t, u.value()) * analytic_laplacian_F(d, target, nl, x, t);
}

/// Grid extent of a target: (inf, sup) over every node and time slice.
inline std::pair<double, double> target_range(const Domain& d, double t0, double T, std::size_t steps,
                                              const Target& target) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t j = 0; j <= steps; ++j) {
    const double t = j == steps ? t0 : t0 - T + T * static_cast<double>(j) / static_cast<double>(steps);
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double v = target.value(d.coord(i), t);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      if (std::isnan(v)) return {std::numeric_limits<double>::quiet_NaN(), v};
    }
  }
  return {lo, hi};
}

/// Max |D_t u - a Delta_h F(u) - H| over interior nodes and every time slice.
inline double discrete_residual(const Scenario& sc) {
  const Domain& d = *sc.domain;
  double worst = 0.0;
  std::vector<double> Fu(d.size());
  for (std::size_t j = 0; j < sc.u.time_count(); ++j) {
    for (std::size_t i = 0; i < d.size(); ++i) Fu[i] = sc.nl.F(sc.u(i, j));
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!d.in_ball(i) || d.on_boundary(i)) continue;
      const double r = time_derivative(sc.u, i, j) - sc.a_at(i, j) * laplacian(d, Fu, i) - sc.H_at(i, j);
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

/// Exact solution on the grid with H := u_t - a Delta F(u). The x-gradient of
/// H comes from fourth-order central differences (step 1e-3) of its closed
/// form. A target whose source vanishes to rounding is tagged analytic with
/// H = 0.
inline Scenario manufacture(std::shared_ptr<const Domain> dom, double t0, double T, std::size_t steps,
                            const Target& target, const DiffusionCoefficient& a, const Nonlinearity& nl) {
  Scenario sc;
  sc.domain = dom;
  sc.t0 = t0;
  sc.T = T;
  sc.nl = nl;
  sc.a = a;
  sc.target = target;
  sc.label = target.name();
  sc.u = SpaceTimeField(dom, t0, T, steps);
  const Domain& d = *dom;
  const double M = nl.M();
  for (std::size_t j = 0; j < sc.u.time_count(); ++j)
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double v = target.value(d.coord(i), sc.u.times()[j]);
      if (!(v > 0.0) || v > M * (1.0 + 1e-12)) {
        std::ostringstream msg;
        const auto p = d.coord(i);
        msg << "target " << target.name() << " leaves (0, M] with M = " << M << ": u = " << v << " at node " << i
            << " (x = " << p[0] << (d.axes() == 2 ? ", y = " + std::to_string(p[1]) : std::string()) << ", t = "
            << sc.u.times()[j] << ")";
        throw RangeError(msg.str());
      }
      sc.u(i, j) = v;
      a.check_bounds(a(d.coord(i), sc.u.times()[j], v), "at node " + std::to_string(i));
    }
  sc.M = sc.u.max();
  sc.floor = sc.u.min();

  auto table = std::make_shared<SpaceTimeField>(sc.u.like());
  auto grads = std::make_shared<std::vector<std::vector<Vec>>>(sc.u.time_count(), std::vector<Vec>(d.size()));
  double source_scale = 0.0, u_t_scale = 0.0;
  const double e = 1e-3;
  for (std::size_t j = 0; j < sc.u.time_count(); ++j) {
    const double t = sc.u.times()[j];
    auto& gslice = (*grads)[j];
    std::vector<double> hvals(d.size()), utv(d.size());
    parallel_for(d.size(), [&](std::size_t i) {
      const Point x = d.coord(i);
      hvals[i] = manufactured_source(d, target, nl, a, x, t);
      utv[i] = std::abs(target.jet<2>(x, t).d(JetVar::t));
      for (int axis = 0; axis < d.axes(); ++axis) {
        auto at = [&](double off) {
          Point y = x;
          y[static_cast<std::size_t>(axis)] += off;
          return manufactured_source(d, target, nl, a, y, t);
        };
        if (d.kind() == DomainKind::radial && x[0] == 0.0) continue;  // even profile
        gslice[i].c[static_cast<std::size_t>(axis)] =
            (-at(2 * e) + 8 * at(e) - 8 * at(-e) + at(-2 * e)) / (12 * e);
      }
    });
    for (std::size_t i = 0; i < d.size(); ++i) {
      (*table)(i, j) = hvals[i];
      source_scale = std::max(source_scale, std::abs(hvals[i]));
      u_t_scale = std::max(u_t_scale, utv[i]);
    }
  }
  if (source_scale <= 1e-10 * std::max(1.0, u_t_scale)) {
    sc.H = SourceTerm::zero();
    sc.provenance = Provenance::analytic;
  } else {
    sc.H.kind = SourceTerm::Kind::manufactured;
    sc.H.table = table;
    sc.H.gradient_table = grads;
    sc.provenance = Provenance::manufactured;
  }
  sc.residual = discrete_residual(sc);
  return sc;
}

/// Initial-boundary value problem for the explicit integrator.
struct ForwardProblem {
  std::shared_ptr<const Domain> domain;
  double t0 = 1.0;
  double T = 1.0;
  Nonlinearity nl = Nonlinearity::identity(1.0, 1.0, 1.0);
  DiffusionCoefficient a;
  SourceTerm H;
  std::function<double(const Point&)> initial;
  std::function<double(const Point&, double)> boundary;  // Dirichlet data
  double cfl_safety = 0.4;
  std::size_t output_steps = 100;
  double floor = 0.0;  // u must stay >= floor (> 0 when set)
  std::string label = "forward";
};

/// Explicit Euler on u_t = a Delta_h F(u) + H(x, t, u, grad u), Dirichlet data
/// on the lateral boundary. The step obeys both the parabolic restriction
/// cfl h^2 / (2 n sup a F'(u)) and, for gradient-dependent H, the transport
/// restriction cfl h / sup |grad_omega H|; it is recomputed every step and
/// clipped to land on each output time.
inline Scenario solve_forward(const ForwardProblem& pb) {
  if (!(pb.cfl_safety > 0.0 && pb.cfl_safety < 1.0)) throw DomainError("cfl_safety must lie in (0, 1)");
  if (!pb.initial || !pb.boundary) throw DomainError("forward problem needs initial and boundary data");
  Scenario sc;
  sc.domain = pb.domain;
  sc.t0 = pb.t0;
  sc.T = pb.T;
  sc.nl = pb.nl;
  sc.a = pb.a;
  sc.H = pb.H;
  sc.provenance = Provenance::solved;
  sc.label = pb.label;
  sc.u = SpaceTimeField(pb.domain, pb.t0, pb.T, pb.output_steps);
  const Domain& d = *pb.domain;
  const double M = pb.nl.M();
  const double h = d.h();
  const double upper = M * (1.0 + 1e-6);

  std::vector<char> active(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) active[i] = d.in_ball(i) && !d.on_boundary(i);

  std::vector<double> cur(d.size()), next(d.size()), Fu(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    cur[i] = active[i] ? pb.initial(d.coord(i)) : pb.boundary(d.coord(i), sc.u.times()[0]);
  auto validate = [&](const std::vector<double>& v, std::size_t step, double t) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!d.in_ball(i)) continue;
      if (!(v[i] > 0.0) || v[i] > upper || v[i] < pb.floor) {
        std::ostringstream msg;
        msg << "forward solve left (" << (pb.floor > 0.0 ? pb.floor : 0.0) << ", M(1+1e-6)] with M = " << M
            << " at step " << step << " (t = " << t << "), node " << i << ": u = " << v[i];
        throw BlowUpError(msg.str());
      }
    }
  };
  validate(cur, 0, sc.u.times()[0]);
  sc.u.slice_mut(0) = cur;

  // Gradient on one slice through the field stencils.
  SpaceTimeField probe(pb.domain, 0.0, 1.0, 2);
  auto grad_at = [&](std::size_t i) { return gradient(probe, i, 0); };

  std::size_t step = 0;
  double t = sc.u.times()[0];
  for (std::size_t out = 1; out < sc.u.time_count(); ++out) {
    const double target_time = sc.u.times()[out];
    while (t < target_time - 1e-14 * std::max(1.0, std::abs(target_time))) {
      double diff_sup = 0.0, transport_sup = 0.0;
      probe.slice_mut(0) = cur;
      for (std::size_t i = 0; i < d.size(); ++i) {
        Fu[i] = pb.nl.F(cur[i]);
        if (!active[i]) continue;
        diff_sup = std::max(diff_sup, pb.a(d.coord(i), t, cur[i]) * pb.nl.dF(cur[i]));
        if (pb.H.kind == SourceTerm::Kind::gradient_power)
          transport_sup = std::max(transport_sup, pb.H.power_gradient(grad_at(i)).norm());
      }
      if (!(diff_sup > 0.0)) throw NumericalError("degenerate diffusion: sup a F'(u) = 0, no stable step");
      double dt = pb.cfl_safety * h * h / (2.0 * d.dim() * diff_sup);
      if (transport_sup > 0.0) dt = std::min(dt, pb.cfl_safety * h / transport_sup);
      dt = std::min(dt, target_time - t);
      parallel_for(d.size(), [&](std::size_t i) {
        if (!active[i]) {
          next[i] = pb.boundary(d.coord(i), t + dt);
          return;
        }
        double rhs = pb.a(d.coord(i), t, cur[i]) * laplacian(d, Fu, i);
        if (pb.H.kind == SourceTerm::Kind::gradient_power) rhs += pb.H.power_value(grad_at(i));
        next[i] = cur[i] + dt * rhs;
      });
      ++step;
      t = (target_time - (t + dt) < 1e-14 * std::max(1.0, std::abs(target_time))) ? target_time : t + dt;
      validate(next, step, t);
      std::swap(cur, next);
    }
    sc.u.slice_mut(out) = cur;
  }
  sc.M = sc.u.max();
  sc.floor = sc.u.min();
  sc.residual = discrete_residual(sc);
  return sc;
}

}  // namespace elab
