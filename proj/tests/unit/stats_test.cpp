// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "qgeom/errors.hpp"
#include "qgeom/stats.hpp"

namespace qs = qgeom::stats;

// Reference values computed with 50-digit arithmetic.
TEST(Erf, MatchesHighPrecisionOracle) {
  EXPECT_EQ(qs::erf(0.0), 0.0);
  EXPECT_NEAR(qs::erf(1.0), 0.842700792949714869, 1e-15);
  EXPECT_NEAR(qs::erf(-1.0), -0.842700792949714869, 1e-15);
  EXPECT_NEAR(qs::erf(0.5), 0.520499877813046538, 1e-15);
  EXPECT_NEAR(qs::erf(3.0), 0.999977909503001415, 1e-15);
  EXPECT_NEAR(qs::erf(-2.2), -0.998137153702018110, 1e-15);
}

TEST(Erf, OddAndBounded) {
  for (double x = -6.0; x <= 6.0; x += 0.173) {
    EXPECT_NEAR(qs::erf(-x), -qs::erf(x), 1e-15);
    EXPECT_LE(std::fabs(qs::erf(x)), 1.0);
  }
}

TEST(Erf, ContinuousAcrossBranchSwitch) {
  const double below = std::nextafter(2.5, 0.0);
  EXPECT_NEAR(qs::erf(below), qs::erf(2.5), 1e-14);
  EXPECT_NEAR(qs::erf(2.5) + qs::erfc(2.5), 1.0, 1e-15);
}

TEST(Erf, RejectsNonFinite) {
  EXPECT_THROW(qs::erf(std::numeric_limits<double>::quiet_NaN()), qgeom::DomainError);
  EXPECT_THROW(qs::erf(std::numeric_limits<double>::infinity()), qgeom::DomainError);
}

TEST(NormalPdf, Values) {
  EXPECT_NEAR(qs::std_normal_pdf(0.0), 0.3989422804014327, 1e-15);
  EXPECT_NEAR(qs::std_normal_pdf(0.6), 0.333224602891799640, 1e-15);
  EXPECT_NEAR(qs::std_normal_pdf(10.0) / 7.69459862670641935e-23, 1.0, 1e-12);
  EXPECT_THROW(qs::std_normal_pdf(std::nan("")), qgeom::DomainError);
}

TEST(NormalCdf, Values) {
  EXPECT_DOUBLE_EQ(qs::std_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(qs::std_normal_cdf(0.6), 0.725746882249926412, 1e-15);
  EXPECT_NEAR(qs::std_normal_cdf(-0.6), 1.0 - 0.725746882249926412, 1e-15);
  EXPECT_NEAR(qs::std_normal_cdf(-3.0) / 0.00134989803163009453, 1.0, 1e-13);
  EXPECT_NEAR(qs::std_normal_cdf(5.0), 0.999999713348428121, 1e-15);
  EXPECT_THROW(qs::std_normal_cdf(-std::numeric_limits<double>::infinity()), qgeom::DomainError);
}

TEST(NormalCdf, SurvivalFunctionIsComplement) {
  for (double x = -5.0; x <= 5.0; x += 0.25) {
    EXPECT_NEAR(qs::std_normal_sf(x), 1.0 - qs::std_normal_cdf(x), 1e-15);
    EXPECT_NEAR(qs::std_normal_sf(x), qs::std_normal_cdf(-x), 1e-15);
  }
}

TEST(FoldedNormal, LinearInSigma) {
  EXPECT_NEAR(qs::folded_normal_mean(1.0), 0.7978845608028654, 1e-15);
  EXPECT_NEAR(qs::folded_normal_mean(2.0), 1.5957691216057308, 1e-15);
  EXPECT_NEAR(qs::folded_normal_mean(0.5), 0.3989422804014327, 1e-15);
  EXPECT_THROW(qs::folded_normal_mean(0.0), qgeom::DomainError);
  EXPECT_THROW(qs::folded_normal_mean(-1.0), qgeom::DomainError);
}

TEST(TruncatedNormal, Values) {
  EXPECT_NEAR(qs::truncated_normal_mean(0.0, 1.0), 0.7978845608028654, 1e-15);
  EXPECT_NEAR(qs::truncated_normal_mean(0.6, 1.0), 1.21502576023754329, 1e-14);
  EXPECT_NEAR(qs::truncated_normal_mean(0.0, 3.0), 2.3936536824085962, 1e-14);
}

TEST(TruncatedNormal, ApproachesThresholdInTheTail) {
  // E[X | X > t] = t + 1/t - 2/t^3 + ... for large t.
  const double t = 20.0;
  EXPECT_NEAR(qs::truncated_normal_mean(t, 1.0), t + 1.0 / t - 2.0 / (t * t * t), 1e-4);
}

TEST(TruncatedNormal, ThrowsWhenTailUnderflows) {
  EXPECT_THROW(qs::truncated_normal_mean(40.0, 1.0), qgeom::OverflowError);
  EXPECT_THROW(qs::truncated_normal_mean(0.5, 0.0), qgeom::DomainError);
}
