// SPDX-License-Identifier: Apache-2.0

#include "qgeom/theory_bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "qgeom/errors.hpp"
#include "qgeom/geometry.hpp"
#include "qgeom/stats.hpp"

namespace qgeom::theory {
namespace {

constexpr std::array<std::pair<FormulaId, std::string_view>, 9> kNames{{
    {FormulaId::BinaryJensen, "binary"},
    {FormulaId::TernaryCurve, "ternary"},
    {FormulaId::NbitFinal, "nbit"},
    {FormulaId::NbitDraft, "nbit-draft"},
    {FormulaId::EpsNormBound, "eps-norm"},
    {FormulaId::L2NormExpectation, "l2-norm"},
    {FormulaId::MaxGaussianBound, "max-gaussian"},
    {FormulaId::MseDecomposition, "mse"},
    {FormulaId::DeltaOptDraft, "delta-opt"},
}};

void require_bits(int bits, const char* fn) {
  if (bits < 1) throw DomainError(std::string(fn) + ": bit width must be >= 1");
}

void require_n_at_least(std::uint64_t n, std::uint64_t min, const char* fn) {
  if (n < min) {
    throw DomainError(std::string(fn) + ": N must be >= " + std::to_string(min));
  }
}

void require_positive(double v, const char* what, const char* fn) {
  if (!(v > 0) || !std::isfinite(v)) {
    throw DomainError(std::string(fn) + ": " + what + " must be positive and finite");
  }
}

double param(const ParamMap& p, const char* key) {
  const auto it = p.find(key);
  if (it == p.end()) throw DomainError(std::string("missing parameter '") + key + "'");
  return it->second;
}

std::uint64_t count_param(const ParamMap& p, const char* key) {
  const double v = param(p, key);
  if (!(v >= 0) || v != std::floor(v)) {
    throw DomainError(std::string("parameter '") + key + "' must be a non-negative integer");
  }
  return static_cast<std::uint64_t>(v);
}

int bits_param(const ParamMap& p, const char* key) {
  const double v = param(p, key);
  if (v != std::floor(v) || v < 1 || v > 64) {
    throw DomainError(std::string("parameter '") + key + "' must be an integer bit width");
  }
  return static_cast<int>(v);
}

}  // namespace

std::string_view formula_name(FormulaId id) {
  for (const auto& [fid, name] : kNames) {
    if (fid == id) return name;
  }
  return "unknown";
}

std::optional<FormulaId> parse_formula(std::string_view name) {
  for (const auto& [fid, n] : kNames) {
    if (n == name) return fid;
  }
  return std::nullopt;
}

double binary_bound() { return stats::kSqrt2OverPi; }

double ternary_bound(double t) {
  if (!(t >= 0) || !std::isfinite(t)) throw DomainError("ternary_bound: t must be finite and >= 0");
  const double tail2 = 2.0 * stats::std_normal_sf(t);  // 2 - 2 Phi(t)
  if (tail2 <= 0.0) {
    throw OverflowError("ternary_bound: 2 - 2 Phi(t) underflows at t = " + std::to_string(t));
  }
  return 2.0 * stats::std_normal_pdf(t) / std::sqrt(tail2);
}

ThresholdOptimum ternary_optimal_threshold(double t_lo, double t_hi, double step) {
  if (!std::isfinite(t_lo) || !std::isfinite(t_hi) || t_lo < 0 || t_lo > t_hi) {
    throw DomainError("ternary_optimal_threshold: empty grid (need 0 <= t_lo <= t_hi)");
  }
  if (t_hi > t_lo && !(step > 0)) {
    throw DomainError("ternary_optimal_threshold: step must be > 0");
  }
  ThresholdOptimum best{t_lo, ternary_bound(t_lo), 0.0};
  if (t_hi > t_lo) {
    const auto count = static_cast<std::size_t>(std::floor((t_hi - t_lo) / step + 1e-9));
    for (std::size_t i = 1; i <= count; ++i) {
      const double t = t_lo + static_cast<double>(i) * step;
      const double c = ternary_bound(t);
      if (c > best.cosine) best = {t, c, 0.0};
    }
  }
  best.angle_deg = angle_degrees(best.cosine);
  return best;
}

double nbit_bound_final(int bits, std::uint64_t n) {
  require_bits(bits, "nbit_bound_final");
  require_n_at_least(n, 2, "nbit_bound_final");
  const double levels = std::ldexp(1.0, bits);
  return levels / (levels + std::sqrt(std::log(static_cast<double>(n))) / std::sqrt(6.0));
}

double nbit_bound_draft(int bits, std::uint64_t n) {
  require_bits(bits, "nbit_bound_draft");
  require_n_at_least(n, 2, "nbit_bound_draft");
  const double levels = std::ldexp(1.0, bits - 1);
  return levels / (levels + std::sqrt(2.0 * std::log(static_cast<double>(n))));
}

double eps_norm_bound(std::uint64_t n, double delta_expectation) {
  require_n_at_least(n, 1, "eps_norm_bound");
  require_positive(delta_expectation, "E[Delta]", "eps_norm_bound");
  return std::sqrt(static_cast<double>(n) / 12.0) * delta_expectation;
}

double l2_norm_expectation(std::uint64_t n, double sigma) {
  require_n_at_least(n, 1, "l2_norm_expectation");
  require_positive(sigma, "sigma", "l2_norm_expectation");
  return std::sqrt(static_cast<double>(n)) * sigma;
}

Interval max_gaussian_bound(std::uint64_t n, double sigma) {
  require_n_at_least(n, 2, "max_gaussian_bound");
  require_positive(sigma, "sigma", "max_gaussian_bound");
  const double root = std::sqrt(std::log(static_cast<double>(n)));
  return {0.23 * sigma * root, stats::kSqrt2 * sigma * root};
}

MseParts mse_decompose(std::span<const double> w, std::span<const double> q) {
  if (w.size() != q.size()) throw ShapeError("mse_decompose: length mismatch");
  if (w.size() < 2) throw DomainError("mse_decompose: need at least 2 elements");
  const double n = static_cast<double>(w.size());
  std::vector<double> err(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) err[i] = w[i] - q[i];
  const double mean = sum(err) / n;
  double sq = 0.0;
  double centred = 0.0;
  for (double e : err) {
    sq += e * e;
    centred += (e - mean) * (e - mean);
  }
  return {sq / n, mean * mean, centred / n};
}

double delta_opt_draft(int k, double max_w, std::uint64_t n) {
  require_bits(k, "delta_opt_draft");
  require_positive(max_w, "max_w", "delta_opt_draft");
  require_n_at_least(n, 1, "delta_opt_draft");
  const double two_k = std::ldexp(1.0, k);
  return two_k * max_w / (static_cast<double>(n) + two_k * two_k);
}

std::vector<DeltaGridRow> delta_grid_search(std::span<const double> w, int k,
                                            std::span<const double> deltas) {
  require_bits(k, "delta_grid_search");
  if (w.empty()) throw DomainError("delta_grid_search: empty input");
  const double lo = -std::ldexp(1.0, k - 1);
  const double hi = std::ldexp(1.0, k - 1) - 1.0;
  std::vector<DeltaGridRow> rows;
  rows.reserve(deltas.size());
  for (double d : deltas) {
    require_positive(d, "Delta", "delta_grid_search");
    double acc = 0.0;
    for (double x : w) {
      const double e = x - d * std::clamp(std::round(x / d), lo, hi);
      acc += e * e;
    }
    rows.push_back({d, acc / static_cast<double>(w.size())});
  }
  return rows;
}

BoundValue evaluate(FormulaId id, const ParamMap& params) {
  BoundValue out{id, params, 0.0};
  switch (id) {
    case FormulaId::BinaryJensen:
      out.value = binary_bound();
      break;
    case FormulaId::TernaryCurve:
      out.value = ternary_bound(param(params, "t"));
      break;
    case FormulaId::NbitFinal:
      out.value = nbit_bound_final(bits_param(params, "M"), count_param(params, "N"));
      break;
    case FormulaId::NbitDraft:
      out.value = nbit_bound_draft(bits_param(params, "M"), count_param(params, "N"));
      break;
    case FormulaId::EpsNormBound:
      out.value = eps_norm_bound(count_param(params, "N"), param(params, "delta"));
      break;
    case FormulaId::L2NormExpectation:
      out.value = l2_norm_expectation(count_param(params, "N"), param(params, "sigma"));
      break;
    case FormulaId::MaxGaussianBound: {
      const auto iv = max_gaussian_bound(count_param(params, "N"), param(params, "sigma"));
      out.params["lower"] = iv.lower;
      out.params["upper"] = iv.upper;
      out.value = iv.upper;
      break;
    }
    case FormulaId::DeltaOptDraft:
      out.value = delta_opt_draft(bits_param(params, "k"), param(params, "max_w"),
                                  count_param(params, "N"));
      break;
    case FormulaId::MseDecomposition:
      throw DomainError("mse decomposition needs weight vectors; call mse_decompose()");
  }
  return out;
}

}  // namespace qgeom::theory
