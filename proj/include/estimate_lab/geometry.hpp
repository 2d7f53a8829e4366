#pragma once

// Spatial domains B(x0, R): a 1-D segment, a radially symmetric model manifold
// of constant curvature (fields depend on the geodesic radius only), and a 2-D
// Euclidean disk sampled on its bounding square.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "estimate_lab/error.hpp"

namespace elab {

using Point = std::array<double, 2>;

enum class DomainKind { segment, radial, cartesian2d };

inline const char* to_string(DomainKind k) {
  switch (k) {
    case DomainKind::segment: return "segment";
    case DomainKind::radial: return "radial";
    case DomainKind::cartesian2d: return "cartesian2d";
  }
  return "?";
}

class Domain {
 public:
  /// [x0 - R, x0 + R]; n = 1. k only enters bounds (through k_+).
  static Domain segment(double x0, double R, double h, double k = 0.0) {
    Domain d(DomainKind::segment, 1, R, k, h);
    d.x0_ = {x0, 0.0};
    d.nx_ = steps(2.0 * R, h) + 1;
    d.h_ = 2.0 * R / static_cast<double>(d.nx_ - 1);
    d.ny_ = 1;
    return d;
  }

  /// Geodesic ball of radius R in the n-dimensional model space with
  /// Ric = -k exactly (sectional curvature -k/(n-1)); k = 0 is Euclidean.
  static Domain radial(int n, double R, double k, double h) {
    if (n < 2) throw DomainError("radial domains need n >= 2");
    if (k < 0.0) throw DomainError("model curvature k must be >= 0 (Ric >= -k with k < 0 is not modelled)");
    Domain d(DomainKind::radial, n, R, k, h);
    d.nx_ = steps(R, h) + 1;
    d.h_ = R / static_cast<double>(d.nx_ - 1);
    d.ny_ = 1;
    return d;
  }

  /// Euclidean disk B(x0, R) in the plane, sampled on [x0 - R, x0 + R]^2.
  static Domain cartesian2d(Point x0, double R, double h) {
    Domain d(DomainKind::cartesian2d, 2, R, 0.0, h);
    d.x0_ = x0;
    d.nx_ = steps(2.0 * R, h) + 1;
    d.ny_ = d.nx_;
    d.h_ = 2.0 * R / static_cast<double>(d.nx_ - 1);
    return d;
  }

  DomainKind kind() const { return kind_; }
  int dim() const { return n_; }
  double R() const { return R_; }
  double k() const { return k_; }
  double k_plus() const { return k_ > 0.0 ? k_ : 0.0; }
  double h() const { return h_; }
  Point x0() const { return x0_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }
  int axes() const { return kind_ == DomainKind::cartesian2d ? 2 : 1; }

  /// Sectional curvature magnitude of the model space, k/(n-1).
  double model_curvature() const {
    return kind_ == DomainKind::radial ? k_ / static_cast<double>(n_ - 1) : 0.0;
  }

  std::size_t index(std::size_t i, std::size_t j = 0) const { return j * nx_ + i; }
  std::size_t ix(std::size_t node) const { return node % nx_; }
  std::size_t iy(std::size_t node) const { return node / nx_; }

  /// Coordinates of a node; radial domains report (r, 0).
  Point coord(std::size_t node) const {
    switch (kind_) {
      case DomainKind::segment: return {x0_[0] - R_ + h_ * static_cast<double>(node), 0.0};
      case DomainKind::radial: return {h_ * static_cast<double>(node), 0.0};
      case DomainKind::cartesian2d:
        return {x0_[0] - R_ + h_ * static_cast<double>(ix(node)),
                x0_[1] - R_ + h_ * static_cast<double>(iy(node))};
    }
    return {};
  }

  /// Geodesic distance to the centre.
  double distance(std::size_t node) const { return distance(coord(node)); }
  double distance(const Point& x) const {
    switch (kind_) {
      case DomainKind::segment: return std::abs(x[0] - x0_[0]);
      case DomainKind::radial: return std::abs(x[0]);
      case DomainKind::cartesian2d: return std::hypot(x[0] - x0_[0], x[1] - x0_[1]);
    }
    return 0.0;
  }

  bool in_ball(std::size_t node) const { return distance(node) <= R_ + snap(); }

  /// Lateral boundary of the sampled ball.
  bool on_boundary(std::size_t node) const {
    switch (kind_) {
      case DomainKind::segment: return node == 0 || node + 1 == nx_;
      case DomainKind::radial: return node + 1 == nx_;
      case DomainKind::cartesian2d: {
        if (!in_ball(node)) return false;
        const std::size_t i = ix(node), j = iy(node);
        if (i == 0 || j == 0 || i + 1 == nx_ || j + 1 == ny_) return true;
        return !in_ball(index(i - 1, j)) || !in_ball(index(i + 1, j)) ||
               !in_ball(index(i, j - 1)) || !in_ball(index(i, j + 1));
      }
    }
    return false;
  }

  /// Grid-level tolerance used when snapping region boundaries to nodes.
  double snap() const { return 1e-9 * h_; }

 private:
  Domain(DomainKind kind, int n, double R, double k, double h) : kind_(kind), n_(n), R_(R), k_(k), h_(h) {
    if (!(R > 0.0)) throw DomainError("domain radius R must be positive");
    if (!(h > 0.0) || h > R) throw DomainError("grid spacing h must lie in (0, R]");
  }

  static std::size_t steps(double length, double h) {
    const double s = std::round(length / h);
    if (s < 3.0) throw DomainError("grid too coarse: fewer than 4 nodes across the domain");
    return static_cast<std::size_t>(s);
  }

  DomainKind kind_;
  int n_;
  double R_;
  double k_;
  double h_;
  Point x0_{0.0, 0.0};
  std::size_t nx_ = 0, ny_ = 1;
};

/// sinh(z)/z without loss of accuracy near 0.
inline double sinhc(double z) {
  if (std::abs(z) < 1e-4) return 1.0 + z * z / 6.0;
  return std::sinh(z) / z;
}

/// Radial metric factor c(r): the model metric is dr^2 + c(r)^2 dtheta^2.
inline double metric_factor(const Domain& dom, double r) {
  if (r < 0.0) throw DomainError("metric factor needs r >= 0");
  const double kc = dom.model_curvature();
  if (kc == 0.0) return r;
  const double s = std::sqrt(kc);
  return r * sinhc(s * r);
}

/// c'(r)/c(r), the mean-curvature weight of geodesic spheres; +inf at r = 0.
inline double metric_log_derivative(const Domain& dom, double r) {
  if (r < 0.0) throw DomainError("metric factor needs r >= 0");
  if (r == 0.0) return std::numeric_limits<double>::infinity();
  const double kc = dom.model_curvature();
  if (kc == 0.0) return 1.0 / r;
  const double z = std::sqrt(kc) * r;
  const double zcoth = std::abs(z) < 1e-4 ? 1.0 + z * z / 3.0 : z / std::tanh(z);
  return zcoth / r;
}

/// Second-order discrete Laplace-Beltrami operator at an interior node of one
/// time slice. Radial: u'' + (n-1)(c'/c)u', with n u''(0) at the origin from
/// the even reflection u(-h) = u(h).
inline double laplacian(const Domain& dom, std::span<const double> u, std::size_t node) {
  const double h2 = dom.h() * dom.h();
  switch (dom.kind()) {
    case DomainKind::segment:
      if (node == 0 || node + 1 >= dom.nx()) throw StencilError("segment Laplacian at boundary node " + std::to_string(node));
      return ((u[node + 1] - u[node]) - (u[node] - u[node - 1])) / h2;
    case DomainKind::radial: {
      if (node + 1 >= dom.nx()) throw StencilError("radial Laplacian at boundary node");
      const double n = static_cast<double>(dom.dim());
      if (node == 0) return n * 2.0 * (u[1] - u[0]) / h2;
      const double r = dom.h() * static_cast<double>(node);
      const double d2 = ((u[node + 1] - u[node]) - (u[node] - u[node - 1])) / h2;
      const double d1 = (u[node + 1] - u[node - 1]) / (2.0 * dom.h());
      return d2 + (n - 1.0) * metric_log_derivative(dom, r) * d1;
    }
    case DomainKind::cartesian2d: {
      const std::size_t i = dom.ix(node), j = dom.iy(node);
      if (i == 0 || j == 0 || i + 1 >= dom.nx() || j + 1 >= dom.ny())
        throw StencilError("5-point Laplacian at grid edge node " + std::to_string(node));
      const double c = u[node];
      return ((u[dom.index(i - 1, j)] - c) + (u[dom.index(i + 1, j)] - c) + (u[dom.index(i, j - 1)] - c) +
              (u[dom.index(i, j + 1)] - c)) / h2;
    }
  }
  return 0.0;
}

inline double geodesic_distance(const Domain& dom, const Point& x) { return dom.distance(x); }
inline double geodesic_distance(const Domain& dom, std::size_t node) { return dom.distance(node); }

/// Upper bound (n-1)/d + sqrt((n-1) k_+) for the Laplacian of the distance
/// function under Ric >= -k. Returns +inf at d = 0.
inline double laplacian_comparison(const Domain& dom, double d) {
  if (d < 0.0) throw DomainError("distance must be >= 0");
  if (d == 0.0) return std::numeric_limits<double>::infinity();
  const double nm1 = static_cast<double>(dom.dim() - 1);
  return nm1 / d + std::sqrt(nm1 * dom.k_plus());
}

}  // namespace elab
