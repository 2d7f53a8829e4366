#pragma once

// Fields sampled on B(x0, R) x [t0 - T, t0] with finite-difference derivative
// access up to third order in space and first order in time, plus sup
// reductions over the subregions used by the estimates.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "estimate_lab/error.hpp"
#include "estimate_lab/geometry.hpp"
#include "estimate_lab/nonlinearity.hpp"

namespace elab {

/// Spatial vector in grid coordinates. Radial domains store the radial
/// component only, which carries the full magnitude of a radial gradient.
struct Vec {
  std::array<double, 2> c{0.0, 0.0};
  double norm() const { return std::hypot(c[0], c[1]); }
  double dot(const Vec& o) const { return c[0] * o.c[0] + c[1] * o.c[1]; }
};

/// Second derivative of a field in an orthonormal frame. Cartesian grids fill
/// the 2x2 block; radial domains store the radial entry in m[0] and the
/// repeated tangential eigenvalue (c'/c) f' with multiplicity n - 1.
struct Hessian {
  std::array<double, 4> m{0.0, 0.0, 0.0, 0.0};
  int axes = 1;
  double tangential = 0.0;
  int tangential_mult = 0;

  double trace() const {
    double t = m[0] + (axes == 2 ? m[3] : 0.0);
    return t + tangential_mult * tangential;
  }
  double norm() const {
    double s = m[0] * m[0];
    if (axes == 2) s += m[1] * m[1] + m[2] * m[2] + m[3] * m[3];
    return std::sqrt(s + tangential_mult * tangential * tangential);
  }
};

struct ThirdDerivative {
  double norm = 0.0;
  bool degraded = false;  // a first-order one-sided stencil was used
};

namespace stencil {

// Accessor along one grid line: f(i) for i in [0, count).
template <class At>
double first(const At& f, std::size_t i, std::size_t count, double h) {
  if (count < 4) throw StencilError("grid too coarse: fewer than 4 nodes in a direction");
  // Written in differences so constants give exactly zero.
  if (i == 0) return (3.0 * (f(1) - f(0)) - (f(2) - f(1))) / (2.0 * h);
  if (i + 1 == count) return (3.0 * (f(i) - f(i - 1)) - (f(i - 1) - f(i - 2))) / (2.0 * h);
  return (f(i + 1) - f(i - 1)) / (2.0 * h);
}

template <class At>
double second(const At& f, std::size_t i, std::size_t count, double h) {
  if (count < 4) throw StencilError("grid too coarse: fewer than 4 nodes in a direction");
  const double h2 = h * h;
  if (i == 0) return (2.0 * (f(0) - f(1)) - 3.0 * (f(1) - f(2)) + (f(2) - f(3))) / h2;
  if (i + 1 == count)
    return (2.0 * (f(i) - f(i - 1)) - 3.0 * (f(i - 1) - f(i - 2)) + (f(i - 2) - f(i - 3))) / h2;
  return ((f(i + 1) - f(i)) - (f(i) - f(i - 1))) / h2;
}

template <class At>
double third(const At& f, std::size_t i, std::size_t count, double h, bool& degraded) {
  if (count < 4) throw StencilError("grid too coarse: fewer than 4 nodes in a direction");
  const double h3 = h * h * h;
  if (i >= 2 && i + 2 < count)
    return ((f(i + 2) - f(i - 2)) - 2.0 * (f(i + 1) - f(i - 1))) / (2.0 * h3);
  degraded = true;
  if (i + 3 < count) return ((f(i + 3) - f(i)) - 3.0 * (f(i + 2) - f(i + 1))) / h3;
  return ((f(i) - f(i - 3)) - 3.0 * (f(i - 1) - f(i - 2))) / h3;
}

}  // namespace stencil

class SpaceTimeField {
 public:
  SpaceTimeField() = default;

  /// Uniform time nodes t0 - T = tau_0 < ... < tau_J = t0.
  SpaceTimeField(std::shared_ptr<const Domain> dom, double t0, double T, std::size_t steps)
      : dom_(std::move(dom)), t0_(t0), T_(T) {
    if (!dom_) throw DomainError("field needs a domain");
    if (!(T > 0.0)) throw DomainError("time window T must be positive");
    if (steps < 2) throw DomainError("need at least 3 time nodes");
    times_.resize(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j)
      times_[j] = t0 - T + T * static_cast<double>(j) / static_cast<double>(steps);
    times_.back() = t0;
    values_.assign(steps + 1, std::vector<double>(dom_->size(), 0.0));
  }

  /// Same grid, zero values.
  SpaceTimeField like() const {
    SpaceTimeField f = *this;
    for (auto& slice : f.values_) std::fill(slice.begin(), slice.end(), 0.0);
    return f;
  }

  const Domain& domain() const { return *dom_; }
  std::shared_ptr<const Domain> domain_ptr() const { return dom_; }
  double t0() const { return t0_; }
  double T() const { return T_; }
  double dt() const { return times_[1] - times_[0]; }
  const std::vector<double>& times() const { return times_; }
  std::size_t time_count() const { return times_.size(); }
  std::size_t node_count() const { return dom_->size(); }

  double operator()(std::size_t node, std::size_t j) const { return values_[j][node]; }
  double& operator()(std::size_t node, std::size_t j) { return values_[j][node]; }
  std::span<const double> slice(std::size_t j) const { return values_[j]; }
  std::vector<double>& slice_mut(std::size_t j) { return values_[j]; }

  double min() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : values_)
      for (std::size_t i = 0; i < s.size(); ++i)
        if (dom_->in_ball(i)) m = std::min(m, s[i]);
    return m;
  }
  double max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& s : values_)
      for (std::size_t i = 0; i < s.size(); ++i)
        if (dom_->in_ball(i)) m = std::max(m, s[i]);
    return m;
  }

 private:
  std::shared_ptr<const Domain> dom_;
  double t0_ = 0.0, T_ = 1.0;
  std::vector<double> times_;
  std::vector<std::vector<double>> values_;
};

namespace detail {

inline auto row(const SpaceTimeField& f, std::size_t node, std::size_t j) {
  const Domain& d = f.domain();
  const std::size_t iy = d.iy(node);
  return [&f, &d, iy, j](std::size_t i) { return f(d.index(i, iy), j); };
}
inline auto column(const SpaceTimeField& f, std::size_t node, std::size_t j) {
  const Domain& d = f.domain();
  const std::size_t ix = d.ix(node);
  return [&f, &d, ix, j](std::size_t i) { return f(d.index(ix, i), j); };
}
// Even extension through the radial origin.
inline auto reflected(const SpaceTimeField& f, std::size_t j) {
  return [&f, j](long i) { return f(static_cast<std::size_t>(i < 0 ? -i : i), j); };
}

}  // namespace detail

inline Vec gradient(const SpaceTimeField& f, std::size_t node, std::size_t j) {
  const Domain& d = f.domain();
  const double h = d.h();
  Vec g;
  switch (d.kind()) {
    case DomainKind::segment:
      g.c[0] = stencil::first(detail::row(f, node, j), node, d.nx(), h);
      break;
    case DomainKind::radial:
      g.c[0] = node == 0 ? 0.0 : stencil::first(detail::row(f, node, j), node, d.nx(), h);
      break;
    case DomainKind::cartesian2d:
      g.c[0] = stencil::first(detail::row(f, node, j), d.ix(node), d.nx(), h);
      g.c[1] = stencil::first(detail::column(f, node, j), d.iy(node), d.ny(), h);
      break;
  }
  return g;
}

inline Hessian hessian(const SpaceTimeField& f, std::size_t node, std::size_t j) {
  const Domain& d = f.domain();
  const double h = d.h();
  Hessian H;
  switch (d.kind()) {
    case DomainKind::segment:
      H.m[0] = stencil::second(detail::row(f, node, j), node, d.nx(), h);
      break;
    case DomainKind::radial: {
      if (d.nx() < 4) throw StencilError("grid too coarse: fewer than 4 nodes in a direction");
      H.tangential_mult = d.dim() - 1;
      if (node == 0) {
        H.m[0] = 2.0 * (f(1, j) - f(0, j)) / (h * h);
        H.tangential = H.m[0];
      } else {
        H.m[0] = stencil::second(detail::row(f, node, j), node, d.nx(), h);
        const double r = h * static_cast<double>(node);
        H.tangential = metric_log_derivative(d, r) *
                       stencil::first(detail::row(f, node, j), node, d.nx(), h);
      }
      break;
    }
    case DomainKind::cartesian2d: {
      H.axes = 2;
      const std::size_t ix = d.ix(node), iy = d.iy(node);
      H.m[0] = stencil::second(detail::row(f, node, j), ix, d.nx(), h);
      H.m[3] = stencil::second(detail::column(f, node, j), iy, d.ny(), h);
      // d/dy of the x-derivative along neighbouring rows.
      auto dx_at_row = [&](std::size_t jy) {
        auto line = [&f, &d, jy, j](std::size_t i) { return f(d.index(i, jy), j); };
        return stencil::first(line, ix, d.nx(), h);
      };
      H.m[1] = H.m[2] = stencil::first(dx_at_row, iy, d.ny(), h);
      break;
    }
  }
  return H;
}

inline double laplacian(const SpaceTimeField& f, std::size_t node, std::size_t j) {
  return hessian(f, node, j).trace();
}

/// Frobenius norm of the third covariant derivative. Second order in the
/// interior; first-order one-sided within two nodes of a grid edge.
inline ThirdDerivative third_derivative_norm(const SpaceTimeField& f, std::size_t node, std::size_t j) {
  const Domain& d = f.domain();
  const double h = d.h();
  ThirdDerivative out;
  switch (d.kind()) {
    case DomainKind::segment:
      out.norm = std::abs(stencil::third(detail::row(f, node, j), node, d.nx(), h, out.degraded));
      break;
    case DomainKind::radial: {
      if (d.nx() < 4) throw StencilError("grid too coarse: fewer than 4 nodes in a direction");
      if (node == 0) break;  // odd derivatives of an even profile vanish at the origin
      double f3;
      if (node + 2 < d.nx()) {
        auto ext = detail::reflected(f, j);
        const long i = static_cast<long>(node);
        f3 = ((ext(i + 2) - ext(i - 2)) - 2.0 * (ext(i + 1) - ext(i - 1))) / (2.0 * h * h * h);
      } else {
        f3 = stencil::third(detail::row(f, node, j), node, d.nx(), h, out.degraded);
      }
      const double f1 = stencil::first(detail::row(f, node, j), node, d.nx(), h);
      const double f2 = stencil::second(detail::row(f, node, j), node, d.nx(), h);
      const double r = h * static_cast<double>(node);
      const double q = metric_log_derivative(d, r);
      const double dq = d.model_curvature() - q * q;
      const double mixed = (f2 - q * f1) * q;
      const double radial_tangential = dq * f1 + q * f2;
      out.norm = std::sqrt(f3 * f3 + (d.dim() - 1) * (2.0 * mixed * mixed +
                                                        radial_tangential * radial_tangential));
      break;
    }
    case DomainKind::cartesian2d: {
      const std::size_t ix = d.ix(node), iy = d.iy(node);
      const double xxx = stencil::third(detail::row(f, node, j), ix, d.nx(), h, out.degraded);
      const double yyy = stencil::third(detail::column(f, node, j), iy, d.ny(), h, out.degraded);
      auto dxx_at_row = [&](std::size_t jy) {
        auto line = [&f, &d, jy, j](std::size_t i) { return f(d.index(i, jy), j); };
        return stencil::second(line, ix, d.nx(), h);
      };
      auto dyy_at_col = [&](std::size_t jx) {
        auto line = [&f, &d, jx, j](std::size_t i) { return f(d.index(jx, i), j); };
        return stencil::second(line, iy, d.ny(), h);
      };
      const double xxy = stencil::first(dxx_at_row, iy, d.ny(), h);
      const double xyy = stencil::first(dyy_at_col, ix, d.nx(), h);
      out.norm = std::sqrt(xxx * xxx + 3.0 * xxy * xxy + 3.0 * xyy * xyy + yyy * yyy);
      break;
    }
  }
  return out;
}

/// Central in time, second-order one-sided at the two end slices.
inline double time_derivative(const SpaceTimeField& f, std::size_t node, std::size_t j) {
  const std::size_t J = f.time_count();
  const double dt = f.dt();
  if (J < 3) throw StencilError("need at least 3 time nodes");
  if (j == 0) return (3.0 * (f(node, 1) - f(node, 0)) - (f(node, 2) - f(node, 1))) / (2.0 * dt);
  if (j + 1 == J) return (3.0 * (f(node, j) - f(node, j - 1)) - (f(node, j - 1) - f(node, j - 2))) / (2.0 * dt);
  return (f(node, j + 1) - f(node, j - 1)) / (2.0 * dt);
}

/// div(F'(u) grad u) = F'(u) Laplacian(u) + F''(u) |grad u|^2.
inline double div_Fprime_grad(const SpaceTimeField& u, const Nonlinearity& nl, std::size_t node,
                              std::size_t j) {
  const Domain& d = u.domain();
  auto check = [&](std::size_t i) {
    if (!(u(i, j) > 0.0))
      throw PositivityError("u <= 0 at node " + std::to_string(i) + ", time index " + std::to_string(j));
  };
  // Every node a stencil can touch lies within three grid steps.
  const long reach = 3;
  if (d.kind() == DomainKind::cartesian2d) {
    const long ix = static_cast<long>(d.ix(node)), iy = static_cast<long>(d.iy(node));
    for (long a = std::max(0L, ix - reach); a <= std::min<long>(d.nx() - 1, ix + reach); ++a)
      for (long b = std::max(0L, iy - reach); b <= std::min<long>(d.ny() - 1, iy + reach); ++b)
        check(d.index(static_cast<std::size_t>(a), static_cast<std::size_t>(b)));
  } else {
    const long i = static_cast<long>(node);
    for (long a = std::max(0L, i - reach); a <= std::min<long>(d.nx() - 1, i + reach); ++a)
      check(static_cast<std::size_t>(a));
  }
  const double s = u(node, j);
  const Vec g = gradient(u, node, j);
  return nl.dF(s) * laplacian(u, node, j) + nl.d2F(s) * g.dot(g);
}

enum class SpatialRegion { ball, inner, ring, boundary };
enum class TemporalRegion { all, initial, early, late };

inline const char* to_string(SpatialRegion r) {
  switch (r) {
    case SpatialRegion::ball: return "ball";
    case SpatialRegion::inner: return "inner";
    case SpatialRegion::ring: return "ring";
    case SpatialRegion::boundary: return "boundary";
  }
  return "?";
}
inline const char* to_string(TemporalRegion r) {
  switch (r) {
    case TemporalRegion::all: return "all";
    case TemporalRegion::initial: return "initial";
    case TemporalRegion::early: return "early";
    case TemporalRegion::late: return "late";
  }
  return "?";
}

/// A subset of the grid. The inner ball B(x0, R - rho) is closed; the late
/// window [t0 - T + delta, t0] includes its left end. Boundaries snap to nodes.
struct Region {
  SpatialRegion spatial = SpatialRegion::ball;
  TemporalRegion temporal = TemporalRegion::all;
  double rho = 0.0;
  double delta = 0.0;

  static Region full() { return {}; }
  /// Q_{R/2, T/2}.
  static Region half(const Domain& d, double T) {
    return {SpatialRegion::inner, TemporalRegion::late, 0.5 * d.R(), 0.5 * T};
  }

  bool spatial_contains(const Domain& d, std::size_t node) const {
    if (!d.in_ball(node)) return false;
    switch (spatial) {
      case SpatialRegion::ball: return true;
      case SpatialRegion::inner: return d.distance(node) <= d.R() - rho + d.snap();
      case SpatialRegion::ring: return d.distance(node) > d.R() - rho + d.snap();
      case SpatialRegion::boundary: return d.on_boundary(node);
    }
    return false;
  }
  bool temporal_contains(const SpaceTimeField& f, std::size_t j) const {
    const double snap = 1e-9 * f.dt();
    const double cut = f.t0() - f.T() + delta;
    switch (temporal) {
      case TemporalRegion::all: return true;
      case TemporalRegion::initial: return j == 0;
      case TemporalRegion::early: return f.times()[j] < cut - snap;
      case TemporalRegion::late: return f.times()[j] >= cut - snap;
    }
    return false;
  }
  bool contains(const SpaceTimeField& f, std::size_t node, std::size_t j) const {
    return temporal_contains(f, j) && spatial_contains(f.domain(), node);
  }

  void validate(const Domain& d, double T) const {
    if ((spatial == SpatialRegion::inner || spatial == SpatialRegion::ring) && !(rho > 0.0 && rho < d.R()))
      throw DomainError("rho must lie in (0, R) for inner/ring regions; got rho = " + std::to_string(rho));
    if ((temporal == TemporalRegion::early || temporal == TemporalRegion::late) && !(delta > 0.0 && delta < T))
      throw DomainError("delta must lie in (0, T) for early/late windows; got delta = " + std::to_string(delta));
  }

  std::string name() const { return std::string(to_string(spatial)) + "x" + to_string(temporal); }
};

/// Max of value(node, j) over the region. Empty regions raise DomainError.
template <class Fn>
double sup_over(const SpaceTimeField& grid, const Region& region, Fn&& value) {
  region.validate(grid.domain(), grid.T());
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t j = 0; j < grid.time_count(); ++j) {
    if (!region.temporal_contains(grid, j)) continue;
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
      if (!region.spatial_contains(grid.domain(), node)) continue;
      any = true;
      best = std::max(best, static_cast<double>(value(node, j)));
    }
  }
  if (!any) throw DomainError("region " + region.name() + " contains no grid node");
  return best;
}

inline double sup_over(const SpaceTimeField& f, const Region& region) {
  return sup_over(f, region, [&f](std::size_t node, std::size_t j) { return f(node, j); });
}

/// Columns: x[,y], t, value. Nodes outside the ball are skipped.
inline void write_csv(std::ostream& out, const SpaceTimeField& f, const std::string& name = "value") {
  const Domain& d = f.domain();
  const bool two = d.axes() == 2;
  out << (d.kind() == DomainKind::radial ? "r" : "x") << (two ? ",y" : "") << ",t," << name << "\n";
  out.precision(17);
  for (std::size_t j = 0; j < f.time_count(); ++j)
    for (std::size_t node = 0; node < f.node_count(); ++node) {
      if (!d.in_ball(node)) continue;
      const Point p = d.coord(node);
      out << p[0];
      if (two) out << "," << p[1];
      out << "," << f.times()[j] << "," << f(node, j) << "\n";
    }
}

}  // namespace elab
