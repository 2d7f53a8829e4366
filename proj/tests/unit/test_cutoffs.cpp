#include <gtest/gtest.h>

#include <cmath>

#include "estimate_lab/cutoffs.hpp"

using namespace elab;

TEST(Smoothstep, EndpointConditions) {
  EXPECT_EQ(smoothstep::S(0.0), 0.0);
  EXPECT_EQ(smoothstep::S(1.0), 1.0);
  for (double s : {0.0, 1.0}) {
    EXPECT_EQ(smoothstep::dS(s), 0.0);
    EXPECT_EQ(smoothstep::d2S(s), 0.0);
  }
  // Derivatives against central differences.
  for (double s : {0.2, 0.5, 0.83}) {
    const double e = 1e-5;
    EXPECT_NEAR(smoothstep::dS(s), (smoothstep::S(s + e) - smoothstep::S(s - e)) / (2 * e), 1e-8);
    EXPECT_NEAR(smoothstep::d2S(s), (smoothstep::dS(s + e) - smoothstep::dS(s - e)) / (2 * e), 1e-8);
  }
}

TEST(Cutoff, ExponentFromTheta) {
  EXPECT_EQ(cutoff_exponent(0.5), 4);
  EXPECT_EQ(cutoff_exponent(0.75), 8);
  EXPECT_THROW(cutoff_exponent(1.0), DomainError);
}

TEST(SpatialCutoff, PlateauAndSupport) {
  const auto c = make_spatial(1.0, 0.5, 0.5);
  EXPECT_EQ(c.value(0.0), 1.0);
  EXPECT_EQ(c.value(0.5), 1.0);
  EXPECT_EQ(c.value(1.0), 0.0);
  EXPECT_EQ(c.value(1.7), 0.0);
  EXPECT_EQ(c.ratio(0.3), 0.0);
  EXPECT_THROW(make_spatial(1.0, 1.0, 0.5), DomainError);
  EXPECT_THROW(make_spatial(1.0, 0.0, 0.5), DomainError);
}

TEST(SpatialCutoff, DerivativesMatchDifferences) {
  const auto c = make_spatial(2.0, 0.7, 0.75);
  for (double r : {1.4, 1.6, 1.9}) {
    const double e = 1e-6;
    EXPECT_NEAR(c.d1(r), (c.value(r + e) - c.value(r - e)) / (2 * e), 1e-6);
    EXPECT_NEAR(c.d2(r), (c.d1(r + e) - c.d1(r - e)) / (2 * e), 1e-5);
  }
}

TEST(SpatialCutoff, MeasuredConstantFiniteAndScaleInvariant) {
  for (double theta : {0.5, 0.75}) {
    const auto a = verify_cutoff(make_spatial(1.0, 0.5, theta));
    const auto b = verify_cutoff(make_spatial(2.0, 1.0, theta));
    const auto c = verify_cutoff(make_spatial(3.0, 0.6, theta), 300000);
    EXPECT_TRUE(std::isfinite(a.C));
    EXPECT_GT(a.C, 0.0);
    EXPECT_NEAR(b.C / a.C, 1.0, 0.02) << theta;
    EXPECT_NEAR(c.C / a.C, 1.0, 0.02) << theta;
    EXPECT_TRUE(a.c2());
    EXPECT_TRUE(a.monotone);
  }
}

TEST(SpatialCutoff, GridIndependence) {
  const auto coarse = verify_cutoff(make_spatial(1.0, 0.5, 0.5), 100000);
  const auto fine = verify_cutoff(make_spatial(1.0, 0.5, 0.5), 200000);
  EXPECT_NEAR(fine.C / coarse.C, 1.0, 0.01);
}

TEST(TemporalCutoff, EndValues) {
  const auto c = make_temporal(1.0, 1.0, 0.3, 0.5);
  EXPECT_EQ(c.value(0.0), 0.0);
  EXPECT_EQ(c.value(-0.5), 0.0);
  EXPECT_EQ(c.value(0.3), 1.0);
  EXPECT_EQ(c.value(0.9), 1.0);
  EXPECT_THROW(make_temporal(1.0, 1.0, 1.0, 0.5), DomainError);
}

TEST(TemporalCutoff, DeltaSweepInvariant) {
  for (double theta : {0.5, 0.75}) {
    const double base = verify_cutoff(make_temporal(1.0, 1.0, 0.1, theta)).C;
    EXPECT_TRUE(std::isfinite(base));
    for (double delta : {0.2, 0.4}) EXPECT_NEAR(verify_cutoff(make_temporal(1.0, 1.0, delta, theta)).C / base, 1.0, 0.02);
    EXPECT_NEAR(verify_cutoff(make_temporal(5.0, 3.0, 0.3, theta)).C / base, 1.0, 0.02);
    const auto m = verify_cutoff(make_temporal(1.0, 1.0, 0.1, theta));
    EXPECT_TRUE(m.c2());
    EXPECT_TRUE(m.monotone);
  }
}
