// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qgeom::theory {

// Closed-form cosine and norm bounds for quantized Gaussian vectors.
// Thresholds t are in units of sigma; all "log" terms are natural logs.

enum class FormulaId {
  BinaryJensen,
  TernaryCurve,
  NbitFinal,
  NbitDraft,
  EpsNormBound,
  L2NormExpectation,
  MaxGaussianBound,
  MseDecomposition,
  DeltaOptDraft,
};

std::string_view formula_name(FormulaId id);
std::optional<FormulaId> parse_formula(std::string_view name);

using ParamMap = std::map<std::string, double>;

struct BoundValue {
  FormulaId formula_id;
  ParamMap params;
  double value = 0.0;
};

/// sqrt(2/pi): expected-cosine lower bound for sign quantization.
double binary_bound();

/// 2 phi(t) / sqrt(2 - 2 Phi(t)). Equals binary_bound() at t = 0.
/// Throws OverflowError once the tail mass underflows.
double ternary_bound(double t);

struct ThresholdOptimum {
  double t_star = 0.0;
  double cosine = 0.0;
  double angle_deg = 0.0;
};

/// Grid argmax of ternary_bound over t_lo, t_lo + step, ..., <= t_hi.
/// Ties go to the smaller t. A zero-width interval evaluates the single
/// point t_lo (step is then ignored).
ThresholdOptimum ternary_optimal_threshold(double t_lo, double t_hi, double step);

/// 2^M / (2^M + sqrt(ln N) / sqrt 6). Requires M >= 1, N >= 2.
double nbit_bound_final(int bits, std::uint64_t n);

/// Early variant 2^(M-1) / (2^(M-1) + sqrt(2 ln N)); kept for comparison.
double nbit_bound_draft(int bits, std::uint64_t n);

/// sqrt(N / 12) * E[Delta]: Jensen bound on E||eps|| for uniform noise.
double eps_norm_bound(std::uint64_t n, double delta_expectation);

/// sqrt(N) * sigma: upper bound on E||W||_2, asymptotically tight.
double l2_norm_expectation(std::uint64_t n, double sigma);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// (0.23 sigma sqrt(ln N), sqrt 2 sigma sqrt(ln N)) bracketing the expected
/// maximum of N centred Gaussians.
Interval max_gaussian_bound(std::uint64_t n, double sigma);

struct MseParts {
  double mse = 0.0;
  double bias_sq = 0.0;
  double variance = 0.0;  // population variance of w - q
};

/// mse = mean((w-q)^2) = mean(w-q)^2 + var(w-q).
MseParts mse_decompose(std::span<const double> w, std::span<const double> q);

/// 2^k max(W) / (N + 2^(2k)). Formula evaluation only.
double delta_opt_draft(int k, double max_w, std::uint64_t n);

struct DeltaGridRow {
  double delta = 0.0;
  double mse = 0.0;
};

/// Empirical MSE of the k-bit signed uniform quantizer
/// q = Delta * clamp(round(w / Delta), -2^(k-1), 2^(k-1) - 1)
/// at each candidate step, for comparison with delta_opt_draft.
std::vector<DeltaGridRow> delta_grid_search(std::span<const double> w, int k,
                                            std::span<const double> deltas);

/// Evaluate a scalar formula from named parameters (t, M, N, sigma, delta,
/// k, max_w). MaxGaussianBound reports the upper end in `value` and both ends
/// in params ("lower", "upper"). MseDecomposition needs vectors and throws.
BoundValue evaluate(FormulaId id, const ParamMap& params);

}  // namespace qgeom::theory
