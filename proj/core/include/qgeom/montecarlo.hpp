// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qgeom/quantizers.hpp"

namespace qgeom::mc {

struct McConfig {
  std::size_t n = 10000;
  double sigma = 1.0;
  std::size_t trials = 100;
  std::uint64_t master_seed = 0;
  QuantizerSpec spec;
  /// Worker threads for the trial fan-out. Results do not depend on it.
  unsigned jobs = 1;

  /// Throws DomainError when n < 2, trials < 1, sigma <= 0 or jobs < 1.
  void validate() const;
};

struct SweepRow {
  double param = 0.0;
  double empirical_mean_cos = 0.0;
  double empirical_se = 0.0;
  double theory_cos = 0.0;
  double empirical_angle_deg = 0.0;
  double theory_angle_deg = 0.0;

  bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by param
  bool operator==(const SweepResult&) const = default;
};

struct CosineStats {
  double mean_cos = 0.0;
  double se = 0.0;              // sample std / sqrt(trials); 0 for one trial
  double mean_angle_deg = 0.0;  // arccos(mean_cos)
};

/// n i.i.d. N(0, sigma^2) draws from CounterRng(seed). The sigma = s stream
/// is exactly s times the sigma = 1 stream for the same seed.
WeightVector sample_gaussian(std::size_t n, double sigma, std::uint64_t seed);

/// Seed of trial `index` (Gaussian weights); stochastic quantizers draw from
/// a second stream keyed by derive_seed(trial_seed, 1).
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Sample mean and standard error of per-trial values, reduced in index
/// order with Neumaier compensation.
CosineStats summarize(std::span<const double> per_trial_cos);

/// Runs `trials` independent trials of fn(index) -> double across `jobs`
/// threads and returns the values in index order.
template <class Fn>
std::vector<double> run_trials(std::size_t trials, unsigned jobs, const Fn& fn);

/// Per-trial cosine between Gaussian weights and their quantized image.
std::vector<double> trial_cosines(const McConfig& cfg);

/// Monte-Carlo estimate of E[cos(W, Q(W))].
CosineStats empirical_cosine(const McConfig& cfg);

/// Ternary sweep; t_grid is in units of sigma, converted to absolute
/// thresholds t * cfg.sigma. Grid must be nonempty, ascending, t >= 0.
SweepResult sweep_threshold(const McConfig& cfg, std::span<const double> t_grid);

/// Midrise (round to nearest) sweep over bit widths in [1, 16]; theory
/// column nbit_bound_final(M, n).
SweepResult sweep_bits(const McConfig& cfg, std::span<const int> bits_grid);

enum class NoiseMode {
  Uniform,     // eps ~ U[-1/2, 1/2]^n, independent of W
  CopyOfWeights,  // eps = W (negative control)
};

struct OrthogonalityReport {
  std::size_t n = 0;
  std::size_t trials = 0;
  double mean_cos = 0.0;
  double std_cos = 0.0;
  double se = 0.0;
  double expected_std = 0.0;  // 1/sqrt(n)
  bool mean_ok = false;       // |mean| <= 3 se
  bool std_ok = false;        // |std - 1/sqrt n| <= 25% of 1/sqrt n
  bool passed() const noexcept { return mean_ok && std_ok; }
};

/// Distribution of cos(W, eps) for independent Gaussian W and noise eps.
OrthogonalityReport eps_orthogonality_check(std::size_t n, std::size_t trials, std::uint64_t seed,
                                            NoiseMode mode = NoiseMode::Uniform);

struct EpsNormReport {
  std::size_t n = 0;
  std::size_t trials = 0;
  int bits = 0;
  double mean_norm = 0.0;      // mean ||eps|| over trials
  double mean_delta = 0.0;     // mean step Delta = max|W| / 2^M
  double bound = 0.0;          // sqrt(n/12) * mean_delta
  double mean_sq_norm = 0.0;   // mean ||eps||^2
  double fraction_trials_above = 0.0;  // per-trial ||eps|| > sqrt(n/12) Delta
  bool holds(double slack = 1e-12) const noexcept { return mean_norm <= bound + slack; }
};

/// Per trial: Gaussian W (sigma), Delta = max|W| / 2^bits, eps ~ U[-Delta/2,
/// Delta/2]^n; compares mean ||eps|| with sqrt(n/12) * mean Delta.
EpsNormReport eps_norm_check(std::size_t n, std::size_t trials, int bits, double sigma,
                             std::uint64_t seed);

struct RangeSandwichReport {
  std::size_t n = 0;
  std::size_t d = 0;
  double sigma = 0.0;
  std::size_t batches = 0;
  double mean_ratio = 0.0;  // mean of C(n) * range(x - mu) / sigma
  double se = 0.0;
  double lower = 0.325;
  double upper = 2.0;
  bool passed() const noexcept { return mean_ratio >= lower && mean_ratio <= upper; }
};

/// Mean over `batches` N(0, sigma^2) batches (n x d) of C(n) * range / sigma,
/// averaged over the d columns.
RangeSandwichReport range_sandwich_check(std::size_t n, std::size_t d, double sigma,
                                         std::size_t batches, std::uint64_t seed,
                                         unsigned jobs = 1);

struct ScaleInvarianceReport {
  std::vector<double> factors;
  std::vector<double> max_abs_diff;  // per factor, range BN forward(c x) vs forward(x)
  double tolerance = 1e-9;
  bool passed() const noexcept;
};

ScaleInvarianceReport range_scale_invariance_check(std::size_t n, std::size_t d, double sigma,
                                                   std::uint64_t seed,
                                                   std::vector<double> factors = {0.5, 3.0, 100.0});

}  // namespace qgeom::mc

#include "qgeom/detail/run_trials.hpp"
