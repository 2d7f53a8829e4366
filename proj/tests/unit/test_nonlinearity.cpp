#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "estimate_lab/nonlinearity.hpp"

using namespace elab;

namespace {
// Composite Simpson with N panels: an independent quadrature for oracles.
template <class Fn>
double simpson(const Fn& f, double a, double b, int N) {
  const double h = (b - a) / N;
  double s = f(a) + f(b);
  for (int i = 1; i < N; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}
}  // namespace

TEST(EvalG, IdentityVanishesAtBasePoint) {
  auto nl = Nonlinearity::identity(2.0, 2.0, 1.0);
  EXPECT_EQ(eval_G(nl, 2.0), 0.0);
}

TEST(EvalG, IdentityGapIsOnePlusLogRatio) {
  auto nl = Nonlinearity::identity(2.0, 2.0, 1.0);
  for (double u : {0.01, 0.3, 1.0, 1.9}) EXPECT_NEAR(xi_minus_G(nl, u), 1.0 + std::log(2.0 / u), 1e-14);
}

TEST(EvalG, PowerGapClosedForm) {
  const double p = 0.75, s0 = 16.0;
  auto nl = Nonlinearity::power(p, 1.0, s0, 0.0);
  for (double s : {1e-6, 0.1, 0.5, 1.0}) {
    const double expect = p / (1 - p) * (1 / std::pow(s, 1 - p) - 1 / std::pow(s0, 1 - p));
    EXPECT_NEAR(xi_minus_G(nl, s), expect, 1e-12 * std::abs(expect));
    EXPECT_NEAR(-eval_G(nl, s), expect, 1e-12 * std::abs(expect));
  }
}

TEST(EvalG, CustomQuadratureAgainstClosedFormAndSimpson) {
  // F = s + s^2, F'/h = 1/h + 2, G(e) from s0 = 1 is 1 + 2(e - 1).
  auto nl = Nonlinearity::polynomial({0.0, 1.0, 1.0}, 4.0, 1.0, 5.0);
  const double e = std::exp(1.0);
  const double got = eval_G(nl, e);
  EXPECT_NEAR(got, 1.0 + 2.0 * (e - 1.0), 1e-10 * got);
  auto integrand = [](double h) { return (1.0 + 2.0 * h) / h; };
  const double coarse = simpson(integrand, 1.0, e, 2000), fine = simpson(integrand, 1.0, e, 4000);
  EXPECT_NEAR(got, fine, 16.0 * std::abs(fine - coarse));
}

TEST(EvalG, RejectsNonPositiveArgument) {
  auto nl = Nonlinearity::power(0.75, 1.0, 16.0, 0.0);
  EXPECT_THROW(eval_G(nl, 0.0), DomainError);
  EXPECT_THROW(eval_G(nl, -1.0), DomainError);
}

TEST(EvalG, StrictlyIncreasingOnSamples) {
  for (const auto& nl : {Nonlinearity::identity(2.0, 2.0, 1.0), Nonlinearity::power(0.75, 1.0, 16.0, 0.0),
                         Nonlinearity::polynomial({0.0, 1.0, 1.0}, 4.0, 1.0, 5.0)}) {
    auto grid = hypothesis_samples(nl, 300);
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (std::size_t i = 1; i < grid.size(); ++i) ASSERT_LT(eval_G(nl, grid[i - 1]), eval_G(nl, grid[i]));
  }
}

TEST(EvalGDerivs, IdentityHasZeroSecond) {
  auto nl = Nonlinearity::identity(2.0, 2.0, 1.0);
  for (double r : {-3.0, 0.0, 0.5}) EXPECT_EQ(eval_g_derivs(nl, r).second, 0.0);
}

TEST(EvalGDerivs, PowerFirstDerivative) {
  const double p = 0.75;
  auto nl = Nonlinearity::power(p, 1.0, 16.0, 0.0);
  for (double r : {-5.0, -1.0, 0.0}) EXPECT_NEAR(eval_g_derivs(nl, r).first, p * std::exp(r * (p - 1)), 1e-14);
}

TEST(EvalGDerivs, MatchFiniteDifferencesAtRandomPoints) {
  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> dist(-6.0, -0.01);
  for (const auto& nl : {Nonlinearity::identity(1.0, 1.0, 1.0), Nonlinearity::power(0.75, 1.0, 16.0, 0.0),
                         Nonlinearity::power(0.9, 1.0, 1024.0, 0.0),
                         Nonlinearity::polynomial({0.0, 1.0, 1.0}, 1.0, 1.0, 5.0)}) {
    for (int i = 0; i < 100; ++i) {
      const double r = dist(rng), step = 1e-4;
      const auto d = eval_g_derivs(nl, r);
      const double fd1 = (eval_g(nl, r + step) - eval_g(nl, r - step)) / (2 * step);
      const double fd2 = (eval_g(nl, r + step) - 2 * eval_g(nl, r) + eval_g(nl, r - step)) / (step * step);
      EXPECT_NEAR(fd1, d.first, 1e-6 * std::abs(d.first)) << nl.label() << " r=" << r;
      // Second difference loses ~8 digits to cancellation; compare on the g' scale.
      EXPECT_NEAR(fd2, d.second, 1e-6 * std::max(std::abs(d.second), std::abs(d.first)) + 5e-7)
          << nl.label() << " r=" << r;
    }
  }
}

TEST(EvalG, OutOfRangeRejected) {
  auto nl = Nonlinearity::power(0.75, 1.0, 16.0, 0.0);
  EXPECT_THROW(eval_g(nl, 0.1), DomainError);
  EXPECT_THROW(eval_g_derivs(nl, 0.1), DomainError);
}

TEST(EvalLambda, IdentityAtUpperBoundIsZero) {
  auto nl = Nonlinearity::identity(3.0, 3.0, 1.0);
  EXPECT_NEAR(eval_lambda(nl, std::log(3.0), 2), 0.0, 1e-14);
}

TEST(EvalLambda, PowerBoundedByTwoGammaPlusOne) {
  const int n = 2;
  const double p = 0.75;
  const auto c = power_law_constants(n, p);
  auto nl = Nonlinearity::power(p, 1.0, c.s0, c.xi);
  for (double s : hypothesis_samples(nl, 2000)) EXPECT_LE(std::abs(eval_lambda(nl, std::log(s), n)), 2 * c.Gamma + 1);
}

TEST(EvalLambda, CustomRecomposesFromParts) {
  auto nl = Nonlinearity::polynomial({0.0, 1.0, 0.5, 0.1}, 2.0, 1.0, 4.0);
  for (double r : {-2.0, -0.5, 0.3}) {
    const auto d = eval_g_derivs(nl, r);
    const double gap = nl.xi() - eval_g(nl, r);
    const double expect = d.first / gap - 1 + std::sqrt(3.0) * std::abs(d.second) / (2 * d.first);
    EXPECT_NEAR(eval_lambda(nl, r, 3), expect, 1e-12 * std::abs(expect));
  }
}

TEST(EvalLambda, GapOrSlopeViolationsThrow) {
  auto nl = Nonlinearity::identity(2.0, 2.0, -1.0);  // xi - G(M) = -1
  EXPECT_THROW(eval_lambda(nl, std::log(2.0), 1), HypothesisViolation);
  auto decreasing = Nonlinearity::polynomial({0.0, -1.0}, 2.0, 1.0, 5.0);
  EXPECT_THROW(eval_lambda(decreasing, 0.0, 1), HypothesisViolation);
}

TEST(CheckHypotheses, IdentityFamily) {
  auto nl = Nonlinearity::identity(2.0, 2.0, 1.0);
  const auto rep = check_hypotheses(nl, 3);
  EXPECT_DOUBLE_EQ(rep.kappa_min, 1.0);
  EXPECT_DOUBLE_EQ(rep.Xi_min, 2.0);
  EXPECT_TRUE(rep.all_satisfied);
  EXPECT_EQ(rep.sample_count, 10002u);
}

TEST(CheckHypotheses, PowerFamilyInRange) {
  auto nl = Nonlinearity::power(0.75, 1.0, 16.0, 0.0);
  const auto rep = check_hypotheses(nl, 2);
  EXPECT_NEAR(rep.kappa_min, 1 - std::sqrt(2.0) / 4, 1e-9);
  EXPECT_GE(rep.eta_min, 1.5 - 1e-12);
  EXPECT_LE(rep.Gamma_max, 0.5 + 1e-12);
  EXPECT_TRUE(rep.all_satisfied);
  EXPECT_TRUE(rep.failing_condition().empty());
}

TEST(CheckHypotheses, PowerFamilyOutOfRangeFails) {
  auto nl = Nonlinearity::power(0.4, 1.0, std::pow(2.0, 1 / 0.6), 0.0);
  const auto rep = check_hypotheses(nl, 4);
  EXPECT_NEAR(rep.kappa_min, -0.2, 1e-12);
  EXPECT_FALSE(rep.all_satisfied);
  EXPECT_FALSE(rep.failing_condition().empty());
}

TEST(CheckHypotheses, NonPositiveSlopeReportedNotThrown) {
  auto nl = Nonlinearity::polynomial({0.0, 1.0, -1.0}, 1.0, 0.25, 5.0);  // F' = 1 - 2s < 0 beyond 1/2
  HypothesisReport rep;
  EXPECT_NO_THROW(rep = check_hypotheses(nl, 1, 500));
  EXPECT_FALSE(rep.all_satisfied);
}

TEST(CheckHypotheses, CustomMatchesPointwiseQuadrature) {
  auto nl = Nonlinearity::polynomial({0.0, 1.0, 0.2}, 1.0, 0.5, 12.0);
  const auto rep = check_hypotheses(nl, 1, 400);
  double eta = 1e300;
  for (double s : hypothesis_samples(nl, 400)) eta = std::min(eta, xi_minus_G(nl, s));
  EXPECT_NEAR(rep.eta_min, eta, 1e-8);
}

TEST(CheckHypotheses, GammaStableUnderDenserSampling) {
  auto nl = Nonlinearity::power(0.75, 1.0, 16.0, 0.0);
  const auto coarse = check_hypotheses(nl, 2, 10000);
  for (double s : hypothesis_samples(nl, 100000)) EXPECT_LE(nl.dF(s) / xi_minus_G(nl, s), coarse.Gamma_max * (1 + 1e-9));
}

TEST(PowerLawConstants, DimensionTwoThreeQuarters) {
  const auto c = power_law_constants(2, 0.75);
  EXPECT_NEAR(c.kappa, 1 - std::sqrt(2.0) / 4, 1e-12);
  EXPECT_NEAR(c.kappa, 0.646447, 1e-6);
  EXPECT_DOUBLE_EQ(c.eta, 1.5);
  EXPECT_DOUBLE_EQ(c.Gamma, 0.5);
  EXPECT_EQ(c.xi, 0.0);
  EXPECT_NEAR(c.s0, 16.0, 1e-12);
  auto nl = Nonlinearity::power(0.75, 1.0, c.s0, c.xi);
  EXPECT_TRUE(check_hypotheses(nl, 2).all_satisfied);
}

TEST(PowerLawConstants, DimensionThree) {
  EXPECT_NEAR(power_law_constants(3, 0.9).kappa, 1 - 0.1 * std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(power_law_constants(3, 0.9).kappa, 0.826795, 1e-6);
}

TEST(PowerLawConstants, OutOfRangeRejected) {
  EXPECT_THROW(power_law_constants(2, 0.25), DomainError);
  EXPECT_THROW(power_law_constants(2, 1.0), DomainError);
  EXPECT_THROW(power_law_constants(2, 0.75, 2.0), DomainError);
  try {
    power_law_constants(2, 0.25);
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("range"), std::string::npos);
  }
}

TEST(PowerLawConstants, ChainLowerBound) {
  for (auto [n, p] : {std::pair{2, 0.75}, std::pair{3, 0.9}, std::pair{4, 0.6}}) {
    const auto c = power_law_constants(n, p);
    auto nl = Nonlinearity::power(p, 1.0, c.s0, c.xi);
    const double floor = p * std::sqrt(double(n)) / std::pow(c.s0, 1 - p);
    for (double s : hypothesis_samples(nl, 5000)) {
      const double lhs = 2 * nl.dF(s) - std::sqrt(double(n)) * std::abs(nl.d2F(s)) * s * xi_minus_G(nl, s) / nl.dF(s);
      ASSERT_GE(lhs, floor - 1e-12) << "n=" << n << " p=" << p << " s=" << s;
    }
  }
}

TEST(Nonlinearity, ExponentOneRoutesToIdentity) {
  EXPECT_EQ(Nonlinearity::power(1.0, 1.0, 1.0, 1.0).family(), Family::identity);
  EXPECT_THROW(Nonlinearity::power(0.0, 1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(Nonlinearity::identity(0.0, 1.0, 1.0), DomainError);
}
