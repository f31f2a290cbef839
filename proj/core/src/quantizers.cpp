// SPDX-License-Identifier: Apache-2.0

#include "qgeom/quantizers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qgeom/errors.hpp"

namespace qgeom {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_nonempty(std::span<const double> w, const char* fn) {
  if (w.empty()) throw DomainError(std::string(fn) + ": empty input vector");
}

void require_finite(std::span<const double> w, const char* fn) {
  for (double v : w) {
    if (!std::isfinite(v)) throw DomainError(std::string(fn) + ": non-finite element");
  }
}

void require_bits(int bits, const char* fn) {
  if (bits < 1 || bits > 16) {
    throw DomainError(std::string(fn) + ": bit width must be in [1, 16], got " +
                      std::to_string(bits));
  }
}

CounterRng& require_rng(CounterRng* rng, const char* fn) {
  if (rng == nullptr) {
    throw DomainError(std::string(fn) + ": stochastic rounding requires an rng state");
  }
  return *rng;
}

double max_abs(std::span<const double> w) {
  double m = 0.0;
  for (double v : w) m = std::max(m, std::fabs(v));
  return m;
}

// floor(y) or floor(y)+1 with P(+1) = y - floor(y).
double stochastic_floor(double y, CounterRng& rng) {
  const double f = std::floor(y);
  return rng.uniform() < (y - f) ? f + 1.0 : f;
}

}  // namespace

WeightVector::WeightVector(std::vector<double> values, double sigma_nominal)
    : values_(std::move(values)), sigma_nominal_(sigma_nominal) {
  if (!(sigma_nominal > 0) || !std::isfinite(sigma_nominal)) {
    throw DomainError("WeightVector: sigma_nominal must be positive");
  }
  require_finite(values_, "WeightVector");
}

void QuantizerSpec::validate() const {
  std::visit(Overloaded{
                 [](const BinaryScheme&) {},
                 [](const TernaryScheme& s) {
                   if (!(s.threshold >= 0) || !std::isfinite(s.threshold)) {
                     throw DomainError("ternary threshold must be finite and >= 0");
                   }
                 },
                 [](const MidriseScheme& s) { require_bits(s.bits, "midrise"); },
                 [](const GemmlowpScheme& s) {
                   require_bits(s.bits, "gemmlowp");
                   if (s.clamp.chunks < 1) throw DomainError("gemmlowp: chunk count K must be >= 1");
                 },
             },
             scheme);
}

std::string QuantizerSpec::describe() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const BinaryScheme&) { os << "binary"; },
                 [&](const TernaryScheme& s) { os << "ternary(t=" << s.threshold << ")"; },
                 [&](const MidriseScheme& s) {
                   os << "midrise(M=" << s.bits
                      << (s.convention == StepConvention::Draft ? ",draft" : "") << ")";
                 },
                 [&](const GemmlowpScheme& s) {
                   os << "gemmlowp(M=" << s.bits;
                   if (s.clamp.mode == ClampPolicy::Mode::ChunkedAverage) os << ",K=" << s.clamp.chunks;
                   os << ")";
                 },
             },
             scheme);
  if (rounding == Rounding::Stochastic) os << "+stochastic";
  return os.str();
}

double QuantizedVector::level(std::size_t i) const noexcept {
  const double c = static_cast<double>(codes[i]);
  if (std::holds_alternative<MidriseScheme>(spec.scheme)) return scale * (c + 0.5);
  if (std::holds_alternative<GemmlowpScheme>(spec.scheme)) return scale * (c - zero_point);
  return scale * c;
}

std::vector<double> QuantizedVector::dequantize() const {
  std::vector<double> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = level(i);
  return out;
}

ClampRange clamp_range(std::span<const double> x, const ClampPolicy& policy) {
  require_nonempty(x, "clamp_range");
  if (policy.mode == ClampPolicy::Mode::AbsMaxMin) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return {*lo, *hi};
  }
  const auto k = static_cast<std::size_t>(policy.chunks);
  if (policy.chunks < 1 || k > x.size()) {
    throw DomainError("clamp_range: chunk count K must satisfy 1 <= K <= n");
  }
  const std::size_t base = x.size() / k;
  const std::size_t extra = x.size() % k;
  double sum_max = 0.0;
  double sum_min = 0.0;
  std::size_t begin = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t len = base + (c < extra ? 1 : 0);
    const auto chunk = x.subspan(begin, len);
    const auto [lo, hi] = std::minmax_element(chunk.begin(), chunk.end());
    sum_min += *lo;
    sum_max += *hi;
    begin += len;
  }
  return {sum_min / static_cast<double>(k), sum_max / static_cast<double>(k)};
}

QuantizedVector quantize_binary(std::span<const double> w) {
  require_nonempty(w, "quantize_binary");
  require_finite(w, "quantize_binary");
  QuantizedVector q;
  q.spec = {BinaryScheme{}, Rounding::Nearest};
  q.codes.resize(w.size());
  // x >= 0 treats both +0.0 and -0.0 as positive.
  std::transform(w.begin(), w.end(), q.codes.begin(),
                 [](double x) { return x >= 0.0 ? 1 : -1; });
  return q;
}

QuantizedVector quantize_ternary(std::span<const double> w, double t) {
  require_nonempty(w, "quantize_ternary");
  require_finite(w, "quantize_ternary");
  if (!(t >= 0) || !std::isfinite(t)) throw DomainError("quantize_ternary: t must be finite and >= 0");
  QuantizedVector q;
  q.spec = {TernaryScheme{t}, Rounding::Nearest};
  q.codes.resize(w.size());
  std::transform(w.begin(), w.end(), q.codes.begin(), [t](double x) {
    if (x > t) return 1;
    if (x < -t) return -1;
    return 0;
  });
  return q;
}

QuantizedVector quantize_uniform_midrise(std::span<const double> w, int bits, Rounding rounding,
                                         CounterRng* rng, StepConvention convention) {
  require_nonempty(w, "quantize_uniform_midrise");
  require_finite(w, "quantize_uniform_midrise");
  require_bits(bits, "quantize_uniform_midrise");
  const double peak = max_abs(w);
  if (peak == 0.0) {
    throw DegenerateInputError("quantize_uniform_midrise: all-zero vector gives step 0");
  }
  const int exponent = convention == StepConvention::Final ? bits : bits - 1;
  const double step = peak / std::ldexp(1.0, exponent);

  QuantizedVector q;
  q.spec = {MidriseScheme{bits, convention}, rounding};
  q.scale = step;
  q.codes.resize(w.size());
  if (rounding == Rounding::Nearest) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      q.codes[i] = static_cast<std::int32_t>(std::floor(w[i] / step));
    }
  } else {
    CounterRng& r = require_rng(rng, "quantize_uniform_midrise");
    // Levels sit at step*(k + 1/2); round x/step - 1/2 stochastically to k.
    for (std::size_t i = 0; i < w.size(); ++i) {
      q.codes[i] = static_cast<std::int32_t>(stochastic_floor(w[i] / step - 0.5, r));
    }
  }
  return q;
}

QuantizedVector quantize_gemmlowp(std::span<const double> x, int bits, const ClampPolicy& clamp,
                                  Rounding rounding, CounterRng* rng) {
  require_nonempty(x, "quantize_gemmlowp");
  require_finite(x, "quantize_gemmlowp");
  require_bits(bits, "quantize_gemmlowp");
  const ClampRange range = clamp_range(x, clamp);
  if (!(range.hi > range.lo)) {
    throw DegenerateInputError("quantize_gemmlowp: clamp range is empty (v_max == v_min)");
  }
  const double levels = std::ldexp(1.0, bits);
  const double scale = (range.hi - range.lo) / levels;
  const double zp = std::round(std::clamp(-range.lo / scale, 0.0, levels));

  QuantizedVector q;
  q.spec = {GemmlowpScheme{bits, clamp}, rounding};
  q.scale = scale;
  q.zero_point = static_cast<std::int32_t>(zp);
  q.clamp = range;
  q.codes.resize(x.size());
  CounterRng* r = rounding == Rounding::Stochastic ? &require_rng(rng, "quantize_gemmlowp") : nullptr;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double y = x[i] / scale + zp;
    const double code = r != nullptr ? stochastic_floor(y, *r) : std::round(y);
    q.codes[i] = static_cast<std::int32_t>(std::clamp(code, 0.0, levels));
  }
  return q;
}

double stochastic_round(double x, double step, CounterRng& rng) {
  if (!std::isfinite(x)) throw DomainError("stochastic_round: x must be finite");
  if (!(step > 0) || !std::isfinite(step)) throw DomainError("stochastic_round: step must be > 0");
  return stochastic_floor(x / step, rng) * step;
}

QuantizedVector stochastic_ternarize(std::span<const double> g, CounterRng& rng) {
  require_finite(g, "stochastic_ternarize");
  QuantizedVector q;
  q.spec = {TernaryScheme{0.0}, Rounding::Stochastic};
  q.codes.assign(g.size(), 0);
  const double s = max_abs(g);
  if (s == 0.0) {
    q.scale = 1.0;
    return q;
  }
  q.scale = s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (rng.uniform() < std::fabs(g[i]) / s) q.codes[i] = g[i] > 0 ? 1 : -1;
  }
  return q;
}

QuantizedVector quantize(std::span<const double> w, const QuantizerSpec& spec, CounterRng* rng) {
  spec.validate();
  return std::visit(
      Overloaded{
          [&](const BinaryScheme&) { return quantize_binary(w); },
          [&](const TernaryScheme& s) { return quantize_ternary(w, s.threshold); },
          [&](const MidriseScheme& s) {
            return quantize_uniform_midrise(w, s.bits, spec.rounding, rng, s.convention);
          },
          [&](const GemmlowpScheme& s) {
            return quantize_gemmlowp(w, s.bits, s.clamp, spec.rounding, rng);
          },
      },
      spec.scheme);
}

}  // namespace qgeom
