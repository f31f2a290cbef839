// SPDX-License-Identifier: Apache-2.0

#include "qgeom/range_bn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qgeom/errors.hpp"
#include "qgeom/quantizers.hpp"

namespace qgeom {
namespace {

void require_batch(const Matrix& x, const char* fn) {
  if (x.rows() < 2) throw DomainError(std::string(fn) + ": batch size must be >= 2");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw DomainError(std::string(fn) + ": non-finite activation");
  }
}

double column_mean(const Matrix& x, std::size_t c) {
  double s = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) s += x(r, c);
  return s / static_cast<double>(x.rows());
}

[[noreturn]] void degenerate_column(const char* fn, std::size_t c, const char* what) {
  throw DegenerateInputError(std::string(fn) + ": feature column " + std::to_string(c) +
                             " has zero " + what);
}

// Per-column denominator: C(n) * range for range BN, sqrt(var + eps) for
// standard BN.
template <class DenomFn>
Matrix normalize(const Matrix& x, const BnParams* params, bool use_affine, const DenomFn& denom) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double mu = column_mean(x, c);
    const double d = denom(c, mu);
    const double g = use_affine ? params->gamma[c] : 1.0;
    const double b = use_affine ? params->beta[c] : 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) out(r, c) = g * (x(r, c) - mu) / d + b;
  }
  return out;
}

double population_variance(const Matrix& x, std::size_t c, double mu) {
  double acc = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double d = x(r, c) - mu;
    acc += d * d;
  }
  return acc / static_cast<double>(x.rows());
}

void check_backward_shapes(const Matrix& x, const Matrix& upstream, const BnParams& params,
                           bool use_affine, const char* fn) {
  if (!x.same_shape(upstream)) throw ShapeError(std::string(fn) + ": upstream shape mismatch");
  if (use_affine) params.validate(x.cols());
}

}  // namespace

BnParams BnParams::identity(std::size_t features, double epsilon) {
  return {std::vector<double>(features, 1.0), std::vector<double>(features, 0.0), epsilon};
}

void BnParams::validate(std::size_t features) const {
  if (gamma.size() != features || beta.size() != features) {
    throw ShapeError("BnParams: gamma/beta must have one entry per feature");
  }
  if (!(epsilon_stability > 0.0 && epsilon_stability <= 1e-2)) {
    throw DomainError("BnParams: epsilon_stability must lie in (0, 1e-2]");
  }
}

double c_of_n(std::uint64_t n) {
  if (n < 2) throw DomainError("c_of_n: batch size must be >= 2 (ln 1 = 0)");
  return 1.0 / std::sqrt(2.0 * std::log(static_cast<double>(n)));
}

ColumnExtrema column_extrema(const Matrix& x, std::size_t c) {
  ColumnExtrema e;
  for (std::size_t r = 1; r < x.rows(); ++r) {
    if (x(r, c) > x(e.argmax, c)) e.argmax = r;
    if (x(r, c) < x(e.argmin, c)) e.argmin = r;
  }
  return e;
}

std::vector<double> range_scale(const Matrix& x) {
  require_batch(x, "range_scale");
  const double cn = c_of_n(x.rows());
  std::vector<double> out(x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const auto e = column_extrema(x, c);
    out[c] = cn * (x(e.argmax, c) - x(e.argmin, c));
  }
  return out;
}

Matrix range_bn_forward(const Matrix& x) {
  require_batch(x, "range_bn_forward");
  const double cn = c_of_n(x.rows());
  return normalize(x, nullptr, false, [&](std::size_t c, double) {
    const auto e = column_extrema(x, c);
    const double range = x(e.argmax, c) - x(e.argmin, c);
    if (!(range > 0.0)) degenerate_column("range_bn_forward", c, "range");
    return cn * range;
  });
}

Matrix range_bn_forward(const Matrix& x, const BnParams& params, bool use_affine) {
  if (!use_affine) return range_bn_forward(x);
  params.validate(x.cols());
  require_batch(x, "range_bn_forward");
  const double cn = c_of_n(x.rows());
  return normalize(x, &params, true, [&](std::size_t c, double) {
    const auto e = column_extrema(x, c);
    const double range = x(e.argmax, c) - x(e.argmin, c);
    if (!(range > 0.0)) degenerate_column("range_bn_forward", c, "range");
    return cn * range;
  });
}

BnGradients range_bn_backward(const Matrix& x, const Matrix& upstream, const BnParams& params,
                              bool use_affine) {
  require_batch(x, "range_bn_backward");
  check_backward_shapes(x, upstream, params, use_affine, "range_bn_backward");
  const std::size_t n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double cn = c_of_n(n);

  BnGradients grads{Matrix(n, x.cols()), std::vector<double>(x.cols(), 0.0),
                    std::vector<double>(x.cols(), 0.0)};
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double mu = column_mean(x, c);
    const auto e = column_extrema(x, c);
    const double range = x(e.argmax, c) - x(e.argmin, c);
    if (!(range > 0.0)) degenerate_column("range_bn_backward", c, "range");
    const double denom = cn * range;
    const double gamma = use_affine ? params.gamma[c] : 1.0;

    // g = dL/dx_hat; y = (x - mu) / (C r).
    //   dL/dx_j = (g_j - mean g) / (C r) - sum_i g_i (x_i - mu) / (C r^2) * dr/dx_j
    // with dr/dx_j = [j == argmax] - [j == argmin].
    double g_mean = 0.0;
    double g_dot_centred = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double g = gamma * upstream(r, c);
      const double xhat = (x(r, c) - mu) / denom;
      g_mean += g;
      g_dot_centred += g * (x(r, c) - mu);
      grads.gamma_grad[c] += upstream(r, c) * xhat;
      grads.beta_grad[c] += upstream(r, c);
    }
    g_mean *= inv_n;
    for (std::size_t r = 0; r < n; ++r) {
      grads.input_grad(r, c) = (gamma * upstream(r, c) - g_mean) / denom;
    }
    const double range_term = g_dot_centred / (denom * range);
    grads.input_grad(e.argmax, c) -= range_term;
    grads.input_grad(e.argmin, c) += range_term;
  }
  if (!use_affine) {
    std::fill(grads.gamma_grad.begin(), grads.gamma_grad.end(), 0.0);
    std::fill(grads.beta_grad.begin(), grads.beta_grad.end(), 0.0);
  }
  return grads;
}

Matrix standard_bn_forward(const Matrix& x) {
  require_batch(x, "standard_bn_forward");
  return normalize(x, nullptr, false, [&](std::size_t c, double mu) {
    const double var = population_variance(x, c, mu);
    if (!(var > 0.0)) degenerate_column("standard_bn_forward", c, "variance");
    return std::sqrt(var);
  });
}

Matrix standard_bn_forward(const Matrix& x, const BnParams& params, bool use_affine) {
  require_batch(x, "standard_bn_forward");
  if (use_affine) {
    params.validate(x.cols());
  } else if (!(params.epsilon_stability > 0.0 && params.epsilon_stability <= 1e-2)) {
    throw DomainError("BnParams: epsilon_stability must lie in (0, 1e-2]");
  }
  return normalize(x, &params, use_affine, [&](std::size_t c, double mu) {
    return std::sqrt(population_variance(x, c, mu) + params.epsilon_stability);
  });
}

BnGradients standard_bn_backward(const Matrix& x, const Matrix& upstream, const BnParams& params,
                                 bool use_affine) {
  require_batch(x, "standard_bn_backward");
  check_backward_shapes(x, upstream, params, use_affine, "standard_bn_backward");
  const std::size_t n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  BnGradients grads{Matrix(n, x.cols()), std::vector<double>(x.cols(), 0.0),
                    std::vector<double>(x.cols(), 0.0)};
  std::vector<double> xhat(n);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double mu = column_mean(x, c);
    const double inv_std =
        1.0 / std::sqrt(population_variance(x, c, mu) + params.epsilon_stability);
    const double gamma = use_affine ? params.gamma[c] : 1.0;
    double g_mean = 0.0;
    double g_xhat_mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      xhat[r] = (x(r, c) - mu) * inv_std;
      const double g = gamma * upstream(r, c);
      g_mean += g;
      g_xhat_mean += g * xhat[r];
      grads.gamma_grad[c] += upstream(r, c) * xhat[r];
      grads.beta_grad[c] += upstream(r, c);
    }
    g_mean *= inv_n;
    g_xhat_mean *= inv_n;
    for (std::size_t r = 0; r < n; ++r) {
      grads.input_grad(r, c) =
          inv_std * (gamma * upstream(r, c) - g_mean - xhat[r] * g_xhat_mean);
    }
  }
  if (!use_affine) {
    std::fill(grads.gamma_grad.begin(), grads.gamma_grad.end(), 0.0);
    std::fill(grads.beta_grad.begin(), grads.beta_grad.end(), 0.0);
  }
  return grads;
}

Matrix range_bn_forward_quantized(const Matrix& x, int bits) {
  Matrix q(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const auto col = x.column(c);
    const auto levels = quantize_gemmlowp(col, bits, ClampPolicy::abs_max_min()).dequantize();
    for (std::size_t r = 0; r < x.rows(); ++r) q(r, c) = levels[r];
  }
  return range_bn_forward(q);
}

}  // namespace qgeom
