// SPDX-License-Identifier: Apache-2.0

#include "qgeom/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qgeom/errors.hpp"
#include "qgeom/geometry.hpp"
#include "qgeom/range_bn.hpp"
#include "qgeom/theory_bounds.hpp"

namespace qgeom::mc {
namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void require_ascending(std::span<const double> grid, const char* fn) {
  if (grid.empty()) throw DomainError(std::string(fn) + ": empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw DomainError(std::string(fn) + ": grid must be strictly ascending");
    }
  }
}

SweepRow make_row(double param, const CosineStats& s, double theory) {
  return {param, s.mean_cos, s.se, theory, s.mean_angle_deg, angle_degrees(theory)};
}

}  // namespace

void McConfig::validate() const {
  if (n < 2) throw DomainError("McConfig: n must be >= 2");
  if (trials < 1) throw DomainError("McConfig: trials must be >= 1");
  if (!(sigma > 0) || !std::isfinite(sigma)) throw DomainError("McConfig: sigma must be > 0");
  if (jobs < 1) throw DomainError("McConfig: jobs must be >= 1");
  spec.validate();
}

WeightVector sample_gaussian(std::size_t n, double sigma, std::uint64_t seed) {
  if (n < 1) throw DomainError("sample_gaussian: n must be >= 1");
  if (!(sigma > 0) || !std::isfinite(sigma)) throw DomainError("sample_gaussian: sigma must be > 0");
  CounterRng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = sigma * rng.normal();
  return WeightVector(std::move(v), sigma);
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return derive_seed(master, index);
}

CosineStats summarize(std::span<const double> values) {
  if (values.empty()) throw DomainError("summarize: no trials");
  CompensatedSum s;
  for (double v : values) s.add(v);
  const double count = static_cast<double>(values.size());
  const double mean = s.value() / count;
  CompensatedSum sq;
  for (double v : values) sq.add((v - mean) * (v - mean));
  CosineStats out;
  out.mean_cos = mean;
  out.se = values.size() > 1 ? std::sqrt(sq.value() / (count - 1.0)) / std::sqrt(count) : 0.0;
  out.mean_angle_deg = angle_degrees(mean);
  return out;
}

std::vector<double> trial_cosines(const McConfig& cfg) {
  cfg.validate();
  return run_trials(cfg.trials, cfg.jobs, [&cfg](std::size_t i) {
    const std::uint64_t seed = trial_seed(cfg.master_seed, i);
    const WeightVector w = sample_gaussian(cfg.n, cfg.sigma, seed);
    CounterRng qrng(derive_seed(seed, 1));
    const QuantizedVector q = quantize(w, cfg.spec, &qrng);
    return cosine_between(w, q).cosine;
  });
}

CosineStats empirical_cosine(const McConfig& cfg) {
  const auto cos = trial_cosines(cfg);
  return summarize(cos);
}

SweepResult sweep_threshold(const McConfig& cfg, std::span<const double> t_grid) {
  require_ascending(t_grid, "sweep_threshold");
  if (t_grid.front() < 0) throw DomainError("sweep_threshold: thresholds must be >= 0");
  SweepResult out;
  out.rows.reserve(t_grid.size());
  for (double t : t_grid) {
    McConfig row_cfg = cfg;
    row_cfg.spec = {TernaryScheme{t * cfg.sigma}, Rounding::Nearest};
    out.rows.push_back(make_row(t, empirical_cosine(row_cfg), theory::ternary_bound(t)));
  }
  return out;
}

SweepResult sweep_bits(const McConfig& cfg, std::span<const int> bits_grid) {
  if (bits_grid.empty()) throw DomainError("sweep_bits: empty grid");
  for (std::size_t i = 0; i < bits_grid.size(); ++i) {
    if (bits_grid[i] < 1 || bits_grid[i] > 16) {
      throw DomainError("sweep_bits: bit widths must lie in [1, 16]");
    }
    if (i > 0 && bits_grid[i] <= bits_grid[i - 1]) {
      throw DomainError("sweep_bits: grid must be strictly ascending");
    }
  }
  SweepResult out;
  out.rows.reserve(bits_grid.size());
  for (int m : bits_grid) {
    McConfig row_cfg = cfg;
    row_cfg.spec = {MidriseScheme{m, StepConvention::Final}, Rounding::Nearest};
    out.rows.push_back(make_row(static_cast<double>(m), empirical_cosine(row_cfg),
                                theory::nbit_bound_final(m, cfg.n)));
  }
  return out;
}

OrthogonalityReport eps_orthogonality_check(std::size_t n, std::size_t trials, std::uint64_t seed,
                                            NoiseMode mode) {
  if (n < 2) throw DomainError("eps_orthogonality_check: n must be >= 2");
  if (trials < 2) throw DomainError("eps_orthogonality_check: need at least 2 trials");
  const auto cos = run_trials(trials, 1, [&](std::size_t i) {
    const std::uint64_t ts = trial_seed(seed, i);
    const WeightVector w = sample_gaussian(n, 1.0, ts);
    if (mode == NoiseMode::CopyOfWeights) return angle_wrt_noise(w, w).cosine;
    CounterRng rng(derive_seed(ts, 2));
    std::vector<double> eps(n);
    for (double& e : eps) e = rng.uniform() - 0.5;
    return angle_wrt_noise(w, eps).cosine;
  });
  const CosineStats s = summarize(cos);
  OrthogonalityReport r;
  r.n = n;
  r.trials = trials;
  r.mean_cos = s.mean_cos;
  r.se = s.se;
  r.std_cos = s.se * std::sqrt(static_cast<double>(trials));
  r.expected_std = 1.0 / std::sqrt(static_cast<double>(n));
  r.mean_ok = std::fabs(r.mean_cos) <= 3.0 * r.se;
  r.std_ok = std::fabs(r.std_cos - r.expected_std) <= 0.25 * r.expected_std;
  return r;
}

EpsNormReport eps_norm_check(std::size_t n, std::size_t trials, int bits, double sigma,
                             std::uint64_t seed) {
  if (n < 1 || trials < 1) throw DomainError("eps_norm_check: n and trials must be >= 1");
  if (bits < 1 || bits > 16) throw DomainError("eps_norm_check: bits must lie in [1, 16]");
  CompensatedSum norm_sum;
  CompensatedSum sq_sum;
  CompensatedSum delta_sum;
  std::size_t above = 0;
  const double root = std::sqrt(static_cast<double>(n) / 12.0);
  for (std::size_t i = 0; i < trials; ++i) {
    const std::uint64_t ts = trial_seed(seed, i);
    const WeightVector w = sample_gaussian(n, sigma, ts);
    double peak = 0.0;
    for (double v : w.values()) peak = std::max(peak, std::fabs(v));
    const double delta = peak / std::ldexp(1.0, bits);
    CounterRng rng(derive_seed(ts, 3));
    std::vector<double> eps(n);
    for (double& e : eps) e = delta * (rng.uniform() - 0.5);
    const double norm = l2_norm(eps);
    norm_sum.add(norm);
    sq_sum.add(norm * norm);
    delta_sum.add(delta);
    if (norm > root * delta) ++above;
  }
  const double t = static_cast<double>(trials);
  EpsNormReport r;
  r.n = n;
  r.trials = trials;
  r.bits = bits;
  r.mean_norm = norm_sum.value() / t;
  r.mean_sq_norm = sq_sum.value() / t;
  r.mean_delta = delta_sum.value() / t;
  r.bound = theory::eps_norm_bound(n, r.mean_delta);
  r.fraction_trials_above = static_cast<double>(above) / t;
  return r;
}

namespace {

Matrix gaussian_batch(std::size_t n, std::size_t d, double sigma, std::uint64_t seed) {
  const WeightVector w = sample_gaussian(n * d, sigma, seed);
  return Matrix(n, d, std::vector<double>(w.values().begin(), w.values().end()));
}

}  // namespace

RangeSandwichReport range_sandwich_check(std::size_t n, std::size_t d, double sigma,
                                         std::size_t batches, std::uint64_t seed, unsigned jobs) {
  if (n < 2) throw DomainError("range_sandwich_check: batch size must be >= 2");
  if (d < 1 || batches < 2) throw DomainError("range_sandwich_check: need d >= 1 and batches >= 2");
  const auto ratios = run_trials(batches, jobs, [&](std::size_t i) {
    const auto scale = range_scale(gaussian_batch(n, d, sigma, trial_seed(seed, i)));
    double acc = 0.0;
    for (double s : scale) acc += s;
    return acc / (static_cast<double>(d) * sigma);
  });
  const CosineStats s = summarize(ratios);
  RangeSandwichReport r;
  r.n = n;
  r.d = d;
  r.sigma = sigma;
  r.batches = batches;
  r.mean_ratio = s.mean_cos;
  r.se = s.se;
  return r;
}

bool ScaleInvarianceReport::passed() const noexcept {
  return std::all_of(max_abs_diff.begin(), max_abs_diff.end(),
                     [this](double v) { return v <= tolerance; });
}

ScaleInvarianceReport range_scale_invariance_check(std::size_t n, std::size_t d, double sigma,
                                                   std::uint64_t seed,
                                                   std::vector<double> factors) {
  const Matrix x = gaussian_batch(n, d, sigma, seed);
  const Matrix base = range_bn_forward(x);
  ScaleInvarianceReport r;
  for (double c : factors) {
    if (!(c > 0)) throw DomainError("range_scale_invariance_check: factors must be > 0");
    Matrix scaled = x;
    scaled *= c;
    const Matrix y = range_bn_forward(scaled);
    double worst = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      worst = std::max(worst, std::fabs(y.data()[i] - base.data()[i]));
    }
    r.max_abs_diff.push_back(worst);
  }
  r.factors = std::move(factors);
  return r;
}

}  // namespace qgeom::mc
