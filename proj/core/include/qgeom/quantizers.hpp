// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qgeom/rng.hpp"

namespace qgeom {

/// Flat weight tensor. All values finite; sigma_nominal records the
/// generating standard deviation and is informational only.
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(std::vector<double> values, double sigma_nominal = 1.0);

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double sigma_nominal() const noexcept { return sigma_nominal_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<const double> view() const noexcept { return values_; }
  operator std::span<const double>() const noexcept { return values_; }  // NOLINT

 private:
  std::vector<double> values_;
  double sigma_nominal_ = 1.0;
};

enum class Rounding { Nearest, Stochastic };

/// Step convention for the midrise quantizer: Final uses max|W| / 2^M, Draft
/// uses max|W| / 2^(M-1) (one bit reserved for the sign).
enum class StepConvention { Final, Draft };

struct ClampPolicy {
  enum class Mode { AbsMaxMin, ChunkedAverage };
  Mode mode = Mode::AbsMaxMin;
  int chunks = 1;

  static ClampPolicy abs_max_min() { return {}; }
  static ClampPolicy chunked_average(int k) { return {Mode::ChunkedAverage, k}; }
};

struct ClampRange {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

struct BinaryScheme {};
struct TernaryScheme {
  double threshold = 0.0;  // absolute units
};
struct MidriseScheme {
  int bits = 8;
  StepConvention convention = StepConvention::Final;
};
struct GemmlowpScheme {
  int bits = 8;
  ClampPolicy clamp;
};

using QuantScheme = std::variant<BinaryScheme, TernaryScheme, MidriseScheme, GemmlowpScheme>;

/// Quantization scheme plus rounding mode. Binary and Ternary ignore the
/// rounding mode.
struct QuantizerSpec {
  QuantScheme scheme = BinaryScheme{};
  Rounding rounding = Rounding::Nearest;

  /// Throws DomainError when t < 0 or bits are outside [1, 16] or K < 1.
  void validate() const;
  std::string describe() const;
};

/// Integer codes plus the affine map back to reals.
///   Binary / Ternary / StcTern: level = scale * code
///   Midrise:                    level = scale * (code + 1/2)
///   Gemmlowp:                   level = scale * (code - zero_point)
struct QuantizedVector {
  std::vector<std::int32_t> codes;
  double scale = 1.0;
  std::int32_t zero_point = 0;
  QuantizerSpec spec;
  std::optional<ClampRange> clamp;  // Gemmlowp only

  std::size_t size() const noexcept { return codes.size(); }
  double level(std::size_t i) const noexcept;
  std::vector<double> dequantize() const;
};

/// Clamp range [v_min, v_max] for the GEMMLOWP scheme. ChunkedAverage splits
/// x into K contiguous chunks (sizes differ by at most one) and averages the
/// per-chunk maxima and minima. Requires 1 <= K <= x.size().
ClampRange clamp_range(std::span<const double> x, const ClampPolicy& policy);

/// sign(x) per coordinate; sign(0) = sign(-0) = +1.
QuantizedVector quantize_binary(std::span<const double> w);

/// +1 if x > t, -1 if x < -t, 0 if |x| <= t (absolute threshold).
QuantizedVector quantize_ternary(std::span<const double> w, double t);

/// Midrise uniform quantizer Q(x) = D * (floor(x / D) + 1/2), D = max|W| / 2^M.
/// Stochastic rounding picks one of the two neighbouring levels so that the
/// expected level equals x. `rng` is required for Rounding::Stochastic.
QuantizedVector quantize_uniform_midrise(std::span<const double> w, int bits,
                                         Rounding rounding = Rounding::Nearest,
                                         CounterRng* rng = nullptr,
                                         StepConvention convention = StepConvention::Final);

/// GEMMLOWP affine quantization:
///   scale      = (v_max - v_min) / 2^M
///   zero_point = round(min(max(-v_min / scale, 0), 2^M))
///   code       = clip(round(x / scale + zero_point), 0, 2^M)
/// The code range is [0, 2^M] inclusive, i.e. 2^M + 1 levels.
QuantizedVector quantize_gemmlowp(std::span<const double> x, int bits, const ClampPolicy& clamp,
                                  Rounding rounding = Rounding::Nearest,
                                  CounterRng* rng = nullptr);

/// Rounds x to floor(x/step)*step or the next grid point up, with the upper
/// point chosen with probability equal to the fractional part.
double stochastic_round(double x, double step, CounterRng& rng);

/// StcTern: s = max|g|, code_i = sign(g_i) with probability |g_i| / s else 0.
/// An all-zero input returns all-zero codes with s = 1.
QuantizedVector stochastic_ternarize(std::span<const double> g, CounterRng& rng);

/// Dispatch on spec.scheme.
QuantizedVector quantize(std::span<const double> w, const QuantizerSpec& spec,
                         CounterRng* rng = nullptr);

}  // namespace qgeom
