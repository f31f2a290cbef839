// SPDX-License-Identifier: Apache-2.0

#include "qgeom/train_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qgeom/errors.hpp"
#include "qgeom/geometry.hpp"
#include "qgeom/quantizers.hpp"
#include "qgeom/stats.hpp"

namespace qgeom::train {
namespace {

constexpr std::uint64_t kDataStream = 10;
constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kGradStream = 12;
constexpr std::uint64_t kShuffleStream = 100;

// Zero vectors compare as parallel to each other and orthogonal to anything else.
double safe_cos(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double mean_of(const std::vector<std::vector<double>>& rows) {
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& row : rows) {
    for (double v : row) {
      acc += v;
      ++count;
    }
  }
  if (count == 0) throw DomainError("AngleTrace: no entries recorded");
  return acc / static_cast<double>(count);
}

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = x.row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

std::vector<int> gather_labels(std::span<const int> labels, std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) out[r] = labels[idx[r]];
  return out;
}

void shuffle(std::vector<std::size_t>& order, CounterRng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
}

std::size_t count_correct(const Matrix& logits, std::span<const int> labels) {
  std::size_t hits = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    if (best == labels[r]) ++hits;
  }
  return hits;
}

}  // namespace

Dataset make_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
  if (cfg.points < 2 || cfg.classes < 2) throw DomainError("make_dataset: need >= 2 points and classes");
  if (!(cfg.spread >= 0) || !(cfg.separation > 0)) {
    throw DomainError("make_dataset: spread must be >= 0 and separation > 0");
  }
  CounterRng rng(seed);
  Dataset d{Matrix(cfg.points, 2), std::vector<int>(cfg.points)};
  const double k_count = static_cast<double>(cfg.classes);
  for (std::size_t i = 0; i < cfg.points; ++i) {
    const std::size_t k = i % cfg.classes;
    d.labels[i] = static_cast<int>(k);
    if (cfg.kind == DatasetKind::Blobs) {
      const double phi = 2.0 * stats::kPi * static_cast<double>(k) / k_count;
      d.x(i, 0) = cfg.separation * std::cos(phi) + cfg.spread * rng.normal();
      d.x(i, 1) = cfg.separation * std::sin(phi) + cfg.spread * rng.normal();
    } else {
      const double radius = static_cast<double>(k + 1) * cfg.separation + cfg.spread * rng.normal();
      const double phi = 2.0 * stats::kPi * rng.uniform();
      d.x(i, 0) = radius * std::cos(phi);
      d.x(i, 1) = radius * std::sin(phi);
    }
  }
  return d;
}

void TrainConfig::validate() const {
  if (data.points < 2 || data.classes < 2) throw ConfigError("dataset: points and classes must be >= 2");
  if (!(data.spread >= 0) || !(data.separation > 0)) {
    throw ConfigError("dataset: spread must be >= 0 and separation > 0");
  }
  if (net.inputs != 2) throw ConfigError("net: inputs must be 2 for the synthetic datasets");
  if (net.outputs != data.classes) throw ConfigError("net: outputs must equal dataset classes");
  for (std::size_t h : net.hidden) {
    if (h < 1) throw ConfigError("net: hidden widths must be >= 1");
  }
  const auto bits_ok = [](int b) { return b >= 2 && b <= 16; };
  if (!bits_ok(quant.weight_bits) || !bits_ok(quant.activation_bits)) {
    throw ConfigError("quant: weight_bits and activation_bits must lie in [2, 16]");
  }
  if (quant.activation_chunks < 1) throw ConfigError("quant: activation_chunks must be >= 1");
  if (!bits_ok(quant.bifurcation.low_bits)) throw ConfigError("bifurcation: low_bits must lie in [2, 16]");
  if (quant.bifurcation.high_bits) {
    if (!bits_ok(*quant.bifurcation.high_bits)) {
      throw ConfigError("bifurcation: high_bits must lie in [2, 16]");
    }
    if (*quant.bifurcation.high_bits < quant.bifurcation.low_bits) {
      throw ConfigError("bifurcation: high_bits must be >= low_bits");
    }
  }
  if (!(optim.learning_rate > 0) || !std::isfinite(optim.learning_rate)) {
    throw ConfigError("optim: learning_rate must be > 0");
  }
  if (!(optim.momentum >= 0 && optim.momentum < 1)) throw ConfigError("optim: momentum must lie in [0, 1)");
  if (optim.batch_size < 2) throw ConfigError("optim: batch_size must be >= 2");
  if (optim.batch_size > data.points) throw ConfigError("optim: batch_size exceeds dataset size");
  if (optim.epochs < 1) throw ConfigError("optim: epochs must be >= 1");
  if (histogram_bins < 1) throw ConfigError("train: histogram_bins must be >= 1");
}

double AngleTrace::mean_backward_cos() const { return mean_of(weight_grad_cos); }

double AngleTrace::mean_forward_cos() const { return mean_of(forward_weight_cos); }

Histogram make_histogram(std::string tensor, std::size_t layer, std::span<const double> values,
                         std::size_t bins) {
  if (bins < 1) throw DomainError("make_histogram: bins must be >= 1");
  if (values.empty()) throw DomainError("make_histogram: empty tensor");
  Histogram h;
  h.tensor = std::move(tensor);
  h.layer = layer;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.lo = *lo;
  h.hi = *hi;
  h.counts.assign(bins, 0);
  const double width = (h.hi - h.lo) / static_cast<double>(bins);
  for (double v : values) {
    std::size_t b = 0;
    if (width > 0) {
      b = static_cast<std::size_t>((v - h.lo) / width);
      b = std::min(b, bins - 1);
    }
    ++h.counts[b];
  }
  h.total = values.size();
  return h;
}

double evaluate_accuracy(const Mlp& net, const Dataset& data, const QuantConfig& q,
                         std::size_t batch, double* loss) {
  const std::size_t n = data.x.rows();
  const std::size_t parts = std::max<std::size_t>(1, n / std::max<std::size_t>(batch, 2));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::size_t hits = 0;
  double loss_sum = 0.0;
  std::size_t begin = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t end = n * (p + 1) / parts;
    const std::span<const std::size_t> chunk(idx.data() + begin, end - begin);
    const Matrix xb = gather_rows(data.x, chunk);
    const std::vector<int> yb = gather_labels(data.labels, chunk);
    const ForwardResult fwd = forward(net, xb, q);
    hits += count_correct(fwd.logits, yb);
    if (loss) loss_sum += softmax_cross_entropy(fwd.logits, yb) * static_cast<double>(chunk.size());
    begin = end;
  }
  if (loss) *loss = loss_sum / static_cast<double>(n);
  return static_cast<double>(hits) / static_cast<double>(n);
}

TrainingReport train(const TrainConfig& cfg) {
  cfg.validate();
  const Dataset data = make_dataset(cfg.data, derive_seed(cfg.seed, kDataStream));
  Mlp net(cfg.net, derive_seed(cfg.seed, kInitStream));
  CounterRng grad_rng(derive_seed(cfg.seed, kGradStream));

  auto blocks = net.parameter_blocks();
  std::vector<std::vector<double>> velocity;
  velocity.reserve(blocks.size());
  for (const auto& b : blocks) velocity.emplace_back(b.size(), 0.0);

  TrainingReport report;
  report.parameter_count = net.parameter_count();
  const std::size_t layer_count = net.layers().size();
  const std::size_t batch = cfg.optim.batch_size;
  const std::size_t steps_per_epoch = data.x.rows() / batch;
  std::vector<std::size_t> order(data.x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.optim.epochs; ++epoch) {
    CounterRng shuffle_rng(derive_seed(cfg.seed, kShuffleStream + epoch));
    shuffle(order, shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      const std::span<const std::size_t> idx(order.data() + s * batch, batch);
      const Matrix xb = gather_rows(data.x, idx);
      const std::vector<int> yb = gather_labels(data.labels, idx);

      const ForwardResult fwd = forward(net, xb, cfg.quant);
      Matrix dlogits;
      const double loss = softmax_cross_entropy(fwd.logits, yb, &dlogits);
      if (!std::isfinite(loss)) {
        throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch) +
                              ", step " + std::to_string(s));
      }
      epoch_loss += loss;
      const BackwardResult bwd = backward_bifurcated(net, fwd, dlogits, cfg.quant, true, grad_rng);

      if (cfg.trace_angles) {
        CounterRng unused(0);
        const BackwardResult ref = backward_bifurcated(net, fwd, dlogits, cfg.quant, false, unused);
        std::vector<double> w_cos(layer_count), l_cos(layer_count), f_cos(layer_count);
        for (std::size_t l = 0; l < layer_count; ++l) {
          w_cos[l] = safe_cos(bwd.grads[l].weights.data(), ref.grads[l].weights.data());
          l_cos[l] = safe_cos(bwd.layer_grads_low[l].data(), bwd.layer_grads[l].data());
          f_cos[l] = safe_cos(net.layers()[l].weights.data(), fwd.caches[l].weights_used.data());
        }
        report.trace.weight_grad_cos.push_back(std::move(w_cos));
        report.trace.layer_grad_cos.push_back(std::move(l_cos));
        report.trace.forward_weight_cos.push_back(std::move(f_cos));
      }

      const bool last_step = epoch + 1 == cfg.optim.epochs && s + 1 == steps_per_epoch;
      if (last_step) {
        for (std::size_t l = 0; l < layer_count; ++l) {
          report.histograms.push_back(
              make_histogram("activation", l, fwd.caches[l].input.data(), cfg.histogram_bins));
          report.histograms.push_back(
              make_histogram("layer_grad", l, bwd.layer_grads_low[l].data(), cfg.histogram_bins));
          report.histograms.push_back(
              make_histogram("weight_grad", l, bwd.grads[l].weights.data(), cfg.histogram_bins));
        }
      }

      const std::vector<double> flat = flatten(bwd.grads);
      std::size_t offset = 0;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        auto& v = velocity[b];
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
          v[i] = cfg.optim.momentum * v[i] + flat[offset + i];
          blocks[b][i] -= cfg.optim.learning_rate * v[i];
        }
        offset += blocks[b].size();
      }
      ++report.steps;
    }
    report.loss_curve.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
    report.accuracy_curve.push_back(evaluate_accuracy(net, data, cfg.quant, batch));
  }
  report.final_accuracy = evaluate_accuracy(net, data, cfg.quant, batch, &report.final_loss);
  if (!std::isfinite(report.final_loss)) throw DivergenceError("train: non-finite final loss");
  return report;
}

Matrix multi_stochastic_ternarization_update(const Matrix& g_s, const Matrix& a, std::size_t samples,
                                             CounterRng& rng) {
  if (samples < 1) throw DomainError("multi_stochastic_ternarization_update: S must be >= 1");
  if (g_s.rows() != a.rows()) {
    throw ShapeError("multi_stochastic_ternarization_update: g_s and a need the same row count");
  }
  Matrix acc(g_s.cols(), a.cols());
  for (std::size_t k = 0; k < samples; ++k) {
    const QuantizedVector t = stochastic_ternarize(g_s.data(), rng);
    acc += matmul_at(Matrix(g_s.rows(), g_s.cols(), t.dequantize()), a);
  }
  acc *= 1.0 / static_cast<double>(samples);
  return acc;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("pearson_correlation: length mismatch");
  if (a.size() < 2) throw DomainError("pearson_correlation: need at least 2 points");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw DegenerateInputError("pearson_correlation: zero variance");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace qgeom::train
