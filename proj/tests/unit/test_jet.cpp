#include <gtest/gtest.h>

#include <cmath>

#include "estimate_lab/jet.hpp"

using elab::Jet;
using elab::JetVar;

TEST(Jet, ProductOfVariablesHasExpectedMixedDerivatives) {
  auto x = Jet<3>::variable(0.7, JetVar::x);
  auto y = Jet<3>::variable(-0.4, JetVar::y);
  auto f = exp(x * y);
  const double xy = 0.7 * -0.4;
  EXPECT_NEAR(f.value(), std::exp(xy), 1e-15);
  EXPECT_NEAR(f.derivative(1, 1, 0), (1.0 + xy) * std::exp(xy), 1e-14);
  EXPECT_NEAR(f.derivative(2, 1, 0), (2.0 * -0.4 + xy * -0.4) * std::exp(xy), 1e-14);
  EXPECT_NEAR(f.derivative(0, 3, 0), 0.7 * 0.7 * 0.7 * std::exp(xy), 1e-14);
}

TEST(Jet, TrigAndPowerChainRule) {
  auto x = Jet<3>::variable(0.3, JetVar::x);
  auto t = Jet<3>::variable(1.2, JetVar::t);
  auto f = sin(x) * exp(-t);
  EXPECT_NEAR(f.derivative(3, 0, 0), -std::cos(0.3) * std::exp(-1.2), 1e-14);
  EXPECT_NEAR(f.derivative(1, 0, 1), -std::cos(0.3) * std::exp(-1.2), 1e-14);
  auto g = pow(1.0 + x * x, 0.75);
  // d/dx (1+x^2)^p = 2 p x (1+x^2)^(p-1)
  EXPECT_NEAR(g.d(JetVar::x), 2 * 0.75 * 0.3 * std::pow(1.09, -0.25), 1e-14);
}

TEST(Jet, TanhMatchesExponentialIdentityThroughFourthOrder) {
  auto x = Jet<4>::variable(0.37, JetVar::x);
  auto direct = tanh(x);
  auto e2 = exp(2.0 * x);
  auto viaexp = (e2 - 1.0) / (e2 + 1.0);
  for (int k = 0; k <= 4; ++k) EXPECT_NEAR(direct.derivative(k, 0, 0), viaexp.derivative(k, 0, 0), 1e-12) << k;
}

TEST(Jet, HyperbolicAndLogConsistency) {
  auto r = Jet<3>::variable(0.8, JetVar::x);
  auto lhs = cosh(r) * cosh(r) - sinh(r) * sinh(r);
  EXPECT_NEAR(lhs.value(), 1.0, 1e-14);
  for (int k = 1; k <= 3; ++k) EXPECT_NEAR(lhs.derivative(k, 0, 0), 0.0, 1e-12);
  auto l = log(exp(r));
  EXPECT_NEAR(l.d(JetVar::x), 1.0, 1e-14);
  EXPECT_NEAR(l.derivative(2, 0, 0), 0.0, 1e-13);
  auto s = sqrt(r * r);
  EXPECT_NEAR(s.derivative(1, 0, 0), 1.0, 1e-14);
}

TEST(Jet, DerivativesBeyondOrderAreZero) {
  auto x = Jet<2>::variable(1.0, JetVar::x);
  EXPECT_EQ((x * x * x).derivative(3, 0, 0), 0.0);
}
