// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qgeom/errors.hpp"
#include "qgeom/quantizers.hpp"
#include "qgeom/rng.hpp"

using namespace qgeom;

namespace {

std::vector<std::int32_t> codes(std::initializer_list<std::int32_t> c) { return c; }

}  // namespace

TEST(Binary, SignCodes) {
  EXPECT_EQ(quantize_binary(std::vector{1.0, -2.0, 3.0}).codes, codes({1, -1, 1}));
  EXPECT_EQ(quantize_binary(std::vector{1.0, 1.0, 1.0, 1.0}).codes, codes({1, 1, 1, 1}));
}

TEST(Binary, SignedZerosMapToPlusOne) {
  EXPECT_EQ(quantize_binary(std::vector{0.0, -0.0}).codes, codes({1, 1}));
}

TEST(Binary, EmptyIsDomainError) {
  EXPECT_THROW(quantize_binary(std::vector<double>{}), DomainError);
}

TEST(Ternary, DeadZone) {
  EXPECT_EQ(quantize_ternary(std::vector{0.5, -0.5, 0.1}, 0.3).codes, codes({1, -1, 0}));
}

TEST(Ternary, BoundaryIsZero) {
  EXPECT_EQ(quantize_ternary(std::vector{0.3}, 0.3).codes, codes({0}));
  EXPECT_EQ(quantize_ternary(std::vector{-0.3}, 0.3).codes, codes({0}));
}

TEST(Ternary, ZeroThresholdMatchesBinaryOnNonzeros) {
  CounterRng rng(5);
  std::vector<double> w(1000);
  for (double& x : w) x = rng.normal();
  const auto t = quantize_ternary(w, 0.0);
  const auto b = quantize_binary(w);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] != 0.0) EXPECT_EQ(t.codes[i], b.codes[i]);
  }
}

TEST(Ternary, NegativeThresholdRejected) {
  EXPECT_THROW(quantize_ternary(std::vector{1.0}, -0.1), DomainError);
}

TEST(Midrise, HandEvaluatedLevels) {
  const auto q = quantize_uniform_midrise(std::vector{1.0, -1.0, 0.25}, 2);
  EXPECT_DOUBLE_EQ(q.scale, 0.25);
  const auto lv = q.dequantize();
  // floor(4) + 1/2 = 4.5 -> 1.125; floor(-4) + 1/2 -> -0.875; floor(1) + 1/2 -> 0.375
  EXPECT_DOUBLE_EQ(lv[0], 1.125);
  EXPECT_DOUBLE_EQ(lv[1], -0.875);
  EXPECT_DOUBLE_EQ(lv[2], 0.375);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_LE(std::fabs(lv[i] - std::vector{1.0, -1.0, 0.25}[i]), 0.125 + 1e-15);
  }
}

TEST(Midrise, ErrorWithinHalfStep) {
  for (double c : {0.1, 1.0, 7.5}) {
    const std::vector<double> w{c, -c};
    const auto q = quantize_uniform_midrise(w, 1);
    EXPECT_DOUBLE_EQ(q.scale, c / 2);
    const auto lv = q.dequantize();
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_LE(std::fabs(w[i] - lv[i]), q.scale / 2 + 1e-15);
  }
}

TEST(Midrise, DraftConventionUsesOneBitLess) {
  const std::vector<double> w{1.0, -0.3};
  const auto q = quantize_uniform_midrise(w, 3, Rounding::Nearest, nullptr, StepConvention::Draft);
  EXPECT_DOUBLE_EQ(q.scale, 0.25);
}

TEST(Midrise, AllZeroIsDegenerate) {
  EXPECT_THROW(quantize_uniform_midrise(std::vector{0.0, 0.0}, 4), DegenerateInputError);
}

TEST(Midrise, StochasticIsUnbiased) {
  const std::vector<double> w{1.0, 0.37, -0.61};
  CounterRng rng(9);
  const int reps = 100000;
  std::vector<double> sum(w.size()), sum2(w.size());
  for (int r = 0; r < reps; ++r) {
    const auto lv = quantize_uniform_midrise(w, 2, Rounding::Stochastic, &rng).dequantize();
    for (std::size_t i = 0; i < w.size(); ++i) {
      sum[i] += lv[i];
      sum2[i] += lv[i] * lv[i];
    }
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double mean = sum[i] / reps;
    const double se = std::sqrt(std::max(sum2[i] / reps - mean * mean, 1e-30) / reps);
    EXPECT_LE(std::fabs(mean - w[i]), 4 * se + 1e-12) << i;
  }
}

TEST(Midrise, StochasticNeedsRng) {
  EXPECT_THROW(quantize_uniform_midrise(std::vector{1.0}, 2, Rounding::Stochastic), DomainError);
}

TEST(Gemmlowp, HandEvaluatedScaleAndZeroPoint) {
  const std::vector<double> x{-1.0, 0.5, 1.0};
  const auto q = quantize_gemmlowp(x, 8, ClampPolicy::abs_max_min());
  EXPECT_DOUBLE_EQ(q.scale, 0.0078125);
  EXPECT_EQ(q.zero_point, 128);
  EXPECT_EQ(q.codes, codes({0, 192, 256}));
  const auto lv = q.dequantize();
  EXPECT_DOUBLE_EQ(lv[0], -1.0);
  EXPECT_DOUBLE_EQ(lv[1], 0.5);
  EXPECT_DOUBLE_EQ(lv[2], 1.0);
}

TEST(Gemmlowp, ChunkedAverageClamp) {
  // Chunk maxima 1, 2, 3, 4 and minima 0, 0, 0, 0.
  const std::vector<double> x{0, 1, 0, 2, 0, 3, 0, 4};
  const auto r = clamp_range(x, ClampPolicy::chunked_average(4));
  EXPECT_DOUBLE_EQ(r.hi, 2.5);
  EXPECT_DOUBLE_EQ(r.lo, 0.0);
  const auto q = quantize_gemmlowp(x, 4, ClampPolicy::chunked_average(4));
  EXPECT_EQ(q.codes.back(), 16);  // 4 is clipped to v_max
  ASSERT_TRUE(q.clamp.has_value());
  EXPECT_DOUBLE_EQ(q.clamp->hi, 2.5);
}

TEST(Gemmlowp, UnevenChunks) {
  const std::vector<double> x{5, 1, 1, 1, 3};  // chunks {5,1}, {1,1}, {3}
  const auto r = clamp_range(x, ClampPolicy::chunked_average(3));
  EXPECT_DOUBLE_EQ(r.hi, 3.0);
  EXPECT_DOUBLE_EQ(r.lo, 5.0 / 3.0);
  EXPECT_THROW(clamp_range(x, ClampPolicy::chunked_average(6)), DomainError);
}

TEST(Gemmlowp, ConstantInputIsDegenerate) {
  EXPECT_THROW(quantize_gemmlowp(std::vector{2.0, 2.0}, 8, ClampPolicy::abs_max_min()),
               DegenerateInputError);
}

TEST(Gemmlowp, CodesStayInRange) {
  CounterRng rng(4);
  std::vector<double> x(5000);
  for (double& v : x) v = rng.normal() * 3 + 1;
  for (int bits : {2, 4, 8}) {
    const auto q = quantize_gemmlowp(x, bits, ClampPolicy::chunked_average(7), Rounding::Stochastic,
                                     &rng);
    for (auto c : q.codes) {
      ASSERT_GE(c, 0);
      ASSERT_LE(c, 1 << bits);
    }
  }
}

TEST(StochasticRound, BernoulliBetweenGridPoints) {
  CounterRng rng(1);
  const int reps = 100000;
  int ups = 0;
  for (int i = 0; i < reps; ++i) {
    const double v = stochastic_round(0.3, 1.0, rng);
    ASSERT_TRUE(v == 0.0 || v == 1.0);
    ups += v == 1.0;
  }
  const double mean = static_cast<double>(ups) / reps;
  EXPECT_LE(std::fabs(mean - 0.3), 4 * std::sqrt(0.21 / reps));
}

TEST(StochasticRound, GridPointsAreFixed) {
  CounterRng rng(2);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(stochastic_round(0.75, 0.25, rng), 0.75);
    EXPECT_EQ(stochastic_round(-2.0, 1.0, rng), -2.0);
  }
  EXPECT_THROW(stochastic_round(std::nan(""), 1.0, rng), DomainError);
}

TEST(StcTern, SaturatedEntriesAreDeterministic) {
  CounterRng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto q = stochastic_ternarize(std::vector{0.7, -0.7}, rng);
    EXPECT_EQ(q.codes, codes({1, -1}));
    EXPECT_DOUBLE_EQ(q.scale, 0.7);
  }
}

TEST(StcTern, AllZeroInput) {
  CounterRng rng(3);
  const auto q = stochastic_ternarize(std::vector{0.0, 0.0, 0.0}, rng);
  EXPECT_EQ(q.codes, codes({0, 0, 0}));
  EXPECT_DOUBLE_EQ(q.scale, 1.0);
}

TEST(StcTern, Unbiased) {
  CounterRng rng(8);
  const std::vector<double> g{0.2, -0.5};
  const int reps = 100000;
  double s0 = 0, s1 = 0, q0 = 0;
  for (int i = 0; i < reps; ++i) {
    const auto lv = stochastic_ternarize(g, rng).dequantize();
    s0 += lv[0];
    q0 += lv[0] * lv[0];
    s1 += lv[1];
  }
  const double m0 = s0 / reps;
  const double se0 = std::sqrt((q0 / reps - m0 * m0) / reps);
  EXPECT_LE(std::fabs(m0 - 0.2), 4 * se0);
  EXPECT_DOUBLE_EQ(s1 / reps, -0.5);
}

TEST(Dispatch, MatchesDirectCalls) {
  const std::vector<double> w{0.9, -0.2, 0.05, -1.3};
  EXPECT_EQ(quantize(w, {BinaryScheme{}}).codes, quantize_binary(w).codes);
  EXPECT_EQ(quantize(w, {TernaryScheme{0.1}}).codes, quantize_ternary(w, 0.1).codes);
  EXPECT_EQ(quantize(w, {MidriseScheme{3}}).codes, quantize_uniform_midrise(w, 3).codes);
  EXPECT_EQ(quantize(w, {GemmlowpScheme{6, ClampPolicy::abs_max_min()}}).codes,
            quantize_gemmlowp(w, 6, ClampPolicy::abs_max_min()).codes);
}

TEST(Spec, Validation) {
  EXPECT_THROW((QuantizerSpec{MidriseScheme{0}}.validate()), DomainError);
  EXPECT_THROW((QuantizerSpec{MidriseScheme{17}}.validate()), DomainError);
  EXPECT_THROW((QuantizerSpec{TernaryScheme{-1.0}}.validate()), DomainError);
  EXPECT_THROW((QuantizerSpec{GemmlowpScheme{8, ClampPolicy::chunked_average(0)}}.validate()),
               DomainError);
  EXPECT_NO_THROW((QuantizerSpec{GemmlowpScheme{8, ClampPolicy::chunked_average(4)}}.validate()));
}

TEST(WeightVectorType, RejectsNonFinite) {
  EXPECT_THROW(WeightVector({1.0, std::nan("")}), DomainError);
  EXPECT_THROW(WeightVector({1.0}, 0.0), DomainError);
}
