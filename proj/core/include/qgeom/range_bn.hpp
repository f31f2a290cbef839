// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qgeom/matrix.hpp"

namespace qgeom {

/// Optional per-feature affine transform y = gamma * x_hat + beta, plus the
/// stabilizer added under the square root of standard batch norm.
struct BnParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  double epsilon_stability = 1e-5;

  static BnParams identity(std::size_t features, double epsilon = 1e-5);
  /// gamma/beta sized to `features`, epsilon in (0, 1e-2].
  void validate(std::size_t features) const;
};

struct BnGradients {
  Matrix input_grad;
  std::vector<double> gamma_grad;
  std::vector<double> beta_grad;
};

/// Scale adjustment C(n) = 1 / sqrt(2 ln n). Requires n >= 2.
double c_of_n(std::uint64_t n);

struct ColumnExtrema {
  std::size_t argmax = 0;
  std::size_t argmin = 0;
};

/// Row index of the max and min of column `c`; ties go to the lowest row.
ColumnExtrema column_extrema(const Matrix& x, std::size_t c);

/// Per-feature C(n) * range(x - mu). range(x - mu) == range(x).
std::vector<double> range_scale(const Matrix& x);

/// x_hat = (x - mu) / (C(n) * range(x - mu)) per column, batch statistics.
/// Throws DegenerateInputError naming the column when a range is zero.
Matrix range_bn_forward(const Matrix& x);
Matrix range_bn_forward(const Matrix& x, const BnParams& params, bool use_affine);

/// Gradient of range_bn_forward. d max / d x is one at the arg-max row and
/// zero elsewhere (likewise for min), ties broken to the lowest row.
BnGradients range_bn_backward(const Matrix& x, const Matrix& upstream, const BnParams& params,
                              bool use_affine);

/// Classical batch norm with population variance. The single-argument form
/// uses no stabilizer and throws on zero variance.
Matrix standard_bn_forward(const Matrix& x);
Matrix standard_bn_forward(const Matrix& x, const BnParams& params, bool use_affine);
BnGradients standard_bn_backward(const Matrix& x, const Matrix& upstream, const BnParams& params,
                                 bool use_affine);

/// Range BN applied after GEMMLOWP quantizing every column to `bits` bits
/// (round to nearest, abs-max/min clamp). Diagnostic only.
Matrix range_bn_forward_quantized(const Matrix& x, int bits);

}  // namespace qgeom
