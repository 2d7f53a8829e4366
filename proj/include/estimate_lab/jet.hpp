#pragma once

// Truncated multivariate Taylor arithmetic in the three variables (x, y, t).
// A Jet<Order> carries every partial derivative of an expression up to total
// order `Order`, which gives analytic derivatives of manufactured solutions
// without hand-written chain rules.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace elab {

enum class JetVar { x = 0, y = 1, t = 2 };

namespace detail {

template <int Order>
struct JetTables {
  static constexpr std::size_t size =
      static_cast<std::size_t>((Order + 1) * (Order + 2) * (Order + 3) / 6);

  struct Product {
    std::size_t lhs, rhs, out;
  };

  std::array<std::array<int, 3>, size> powers{};
  std::vector<Product> products;

  JetTables() {
    std::size_t i = 0;
    for (int deg = 0; deg <= Order; ++deg)
      for (int a = deg; a >= 0; --a)
        for (int b = deg - a; b >= 0; --b) powers[i++] = {a, b, deg - a - b};
    for (std::size_t l = 0; l < size; ++l)
      for (std::size_t r = 0; r < size; ++r) {
        const int a = powers[l][0] + powers[r][0];
        const int b = powers[l][1] + powers[r][1];
        const int c = powers[l][2] + powers[r][2];
        if (a + b + c <= Order) products.push_back({l, r, index(a, b, c)});
      }
  }

  std::size_t index(int a, int b, int c) const {
    for (std::size_t i = 0; i < size; ++i)
      if (powers[i][0] == a && powers[i][1] == b && powers[i][2] == c) return i;
    return size;
  }

  static const JetTables& get() {
    static const JetTables tables;
    return tables;
  }
};

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace detail

template <int Order>
class Jet {
  static_assert(Order >= 0 && Order <= 4, "jets are supported up to order 4");
  using Tables = detail::JetTables<Order>;

 public:
  static constexpr std::size_t size = Tables::size;

  Jet() = default;
  Jet(double value) { c_[0] = value; }  // NOLINT: implicit constants are the point

  static Jet variable(double value, JetVar var) {
    Jet j(value);
    if constexpr (Order >= 1) j.c_[1 + static_cast<std::size_t>(var)] = 1.0;
    return j;
  }

  double value() const { return c_[0]; }

  /// Partial derivative d^(a+b+c) / dx^a dy^b dt^c at the expansion point.
  double derivative(int a, int b, int c) const {
    if (a + b + c > Order) return 0.0;
    const std::size_t i = Tables::get().index(a, b, c);
    return c_[i] * detail::factorial(a) * detail::factorial(b) * detail::factorial(c);
  }
  double d(JetVar v) const {
    return derivative(v == JetVar::x, v == JetVar::y, v == JetVar::t);
  }

  /// f(*this) given f and its derivatives at value(): derivs[k] = f^(k)(value()).
  Jet compose(const std::array<double, Order + 1>& derivs) const {
    Jet delta = *this;
    delta.c_[0] = 0.0;
    Jet out(derivs[Order] / detail::factorial(Order));
    for (int k = Order - 1; k >= 0; --k) {
      out = out * delta;
      out.c_[0] += derivs[static_cast<std::size_t>(k)] / detail::factorial(k);
    }
    return out;
  }

  Jet operator-() const {
    Jet r;
    for (std::size_t i = 0; i < size; ++i) r.c_[i] = -c_[i];
    return r;
  }
  Jet& operator+=(const Jet& o) {
    for (std::size_t i = 0; i < size; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (std::size_t i = 0; i < size; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (const auto& p : Tables::get().products) r.c_[p.out] += a.c_[p.lhs] * b.c_[p.rhs];
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

  friend Jet reciprocal(const Jet& x) {
    std::array<double, Order + 1> d{};
    const double a = x.value();
    double term = 1.0 / a;
    for (int k = 0; k <= Order; ++k) {
      d[static_cast<std::size_t>(k)] = term;
      term *= -(k + 1) / a;
    }
    return x.compose(d);
  }
  friend Jet exp(const Jet& x) {
    std::array<double, Order + 1> d{};
    d.fill(std::exp(x.value()));
    return x.compose(d);
  }
  friend Jet log(const Jet& x) {
    std::array<double, Order + 1> d{};
    const double a = x.value();
    d[0] = std::log(a);
    double term = 1.0 / a;
    for (int k = 1; k <= Order; ++k) {
      d[static_cast<std::size_t>(k)] = term;
      term *= -k / a;
    }
    return x.compose(d);
  }
  friend Jet pow(const Jet& x, double p) {
    std::array<double, Order + 1> d{};
    const double a = x.value();
    double coef = 1.0;
    for (int k = 0; k <= Order; ++k) {
      d[static_cast<std::size_t>(k)] = coef * std::pow(a, p - k);
      coef *= p - k;
    }
    return x.compose(d);
  }
  friend Jet sqrt(const Jet& x) { return pow(x, 0.5); }
  friend Jet sin(const Jet& x) {
    const double s = std::sin(x.value()), c = std::cos(x.value());
    const std::array<double, 4> cycle{s, c, -s, -c};
    std::array<double, Order + 1> d{};
    for (int k = 0; k <= Order; ++k) d[static_cast<std::size_t>(k)] = cycle[k % 4];
    return x.compose(d);
  }
  friend Jet cos(const Jet& x) {
    const double s = std::sin(x.value()), c = std::cos(x.value());
    const std::array<double, 4> cycle{c, -s, -c, s};
    std::array<double, Order + 1> d{};
    for (int k = 0; k <= Order; ++k) d[static_cast<std::size_t>(k)] = cycle[k % 4];
    return x.compose(d);
  }
  friend Jet sinh(const Jet& x) {
    const double s = std::sinh(x.value()), c = std::cosh(x.value());
    std::array<double, Order + 1> d{};
    for (int k = 0; k <= Order; ++k) d[static_cast<std::size_t>(k)] = (k % 2 == 0) ? s : c;
    return x.compose(d);
  }
  friend Jet cosh(const Jet& x) {
    const double s = std::sinh(x.value()), c = std::cosh(x.value());
    std::array<double, Order + 1> d{};
    for (int k = 0; k <= Order; ++k) d[static_cast<std::size_t>(k)] = (k % 2 == 0) ? c : s;
    return x.compose(d);
  }
  friend Jet tanh(const Jet& x) {
    const double th = std::tanh(x.value());
    std::array<double, 5> all{};
    all[0] = th;
    all[1] = 1.0 - th * th;
    all[2] = -2.0 * th * all[1];
    all[3] = -2.0 * (all[1] * all[1] + th * all[2]);
    all[4] = -2.0 * (3.0 * all[1] * all[2] + th * all[3]);
    std::array<double, Order + 1> d{};
    for (int k = 0; k <= Order; ++k) d[static_cast<std::size_t>(k)] = all[static_cast<std::size_t>(k)];
    return x.compose(d);
  }

 private:
  std::array<double, size> c_{};
};

}  // namespace elab
