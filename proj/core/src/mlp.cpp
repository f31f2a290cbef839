// SPDX-License-Identifier: Apache-2.0

#include "qgeom/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qgeom/errors.hpp"

namespace qgeom::train {
namespace {

Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = std::max(v, 0.0);
  return out;
}

Matrix norm_forward(NormKind kind, const Matrix& z, const BnParams& bn, bool affine) {
  switch (kind) {
    case NormKind::Range:
      return range_bn_forward(z, bn, affine);
    case NormKind::Standard:
      return standard_bn_forward(z, bn, affine);
    case NormKind::None:
      break;
  }
  return z;
}

BnGradients norm_backward(NormKind kind, const Matrix& z, const Matrix& upstream,
                          const BnParams& bn, bool affine) {
  if (kind == NormKind::Range) return range_bn_backward(z, upstream, bn, affine);
  return standard_bn_backward(z, upstream, bn, affine);
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) s[c] += m(r, c);
  return s;
}

}  // namespace

Mlp::Mlp(const NetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.inputs < 1 || cfg.outputs < 2) {
    throw DomainError("Mlp: need at least one input and two output classes");
  }
  CounterRng rng(seed);
  std::size_t fan_in = cfg.inputs;
  const auto add_layer = [&](std::size_t fan_out, bool hidden) {
    LayerState layer;
    layer.hidden = hidden;
    layer.weights = Matrix(fan_out, fan_in);
    const double stddev = std::sqrt((hidden ? 2.0 : 1.0) / static_cast<double>(fan_in));
    for (double& w : layer.weights.data()) w = stddev * rng.normal();
    const bool has_norm = hidden && cfg.norm != NormKind::None;
    if (!has_norm) layer.bias.assign(fan_out, 0.0);
    if (has_norm) layer.bn = BnParams::identity(fan_out);
    layers_.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (std::size_t h : cfg.hidden) {
    if (h < 1) throw DomainError("Mlp: hidden layer width must be >= 1");
    add_layer(h, true);
  }
  add_layer(cfg.outputs, false);
}

std::vector<std::span<double>> Mlp::parameter_blocks() {
  std::vector<std::span<double>> blocks;
  for (auto& layer : layers_) {
    blocks.emplace_back(layer.weights.data());
    if (!layer.bias.empty()) blocks.emplace_back(layer.bias);
    if (!layer.bn.gamma.empty() && cfg_.affine) {
      blocks.emplace_back(layer.bn.gamma);
      blocks.emplace_back(layer.bn.beta);
    }
  }
  return blocks;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    n += layer.weights.size() + layer.bias.size();
    if (cfg_.affine) n += layer.bn.gamma.size() + layer.bn.beta.size();
  }
  return n;
}

bool layer_quantized(const QuantConfig& q, std::size_t index, std::size_t count) {
  if (!q.enabled) return false;
  if (q.pin_first_last && (index == 0 || index + 1 == count)) return false;
  return true;
}

Matrix fake_quantize(const Matrix& m, int bits, const ClampPolicy& clamp, Rounding rounding,
                     CounterRng* rng, std::optional<ClampRange>* range_out) {
  ClampPolicy policy = clamp;
  if (policy.mode == ClampPolicy::Mode::ChunkedAverage) {
    policy.chunks = static_cast<int>(std::min<std::size_t>(policy.chunks, m.size()));
  }
  const ClampRange range = clamp_range(m.data(), policy);
  if (!(range.hi > range.lo)) {
    // A constant tensor has no usable scale; pass it through untouched.
    if (range_out) range_out->reset();
    return m;
  }
  const QuantizedVector q = quantize_gemmlowp(m.data(), bits, policy, rounding, rng);
  if (range_out) *range_out = q.clamp;
  return Matrix(m.rows(), m.cols(), q.dequantize());
}

ForwardResult forward(const Mlp& net, const Matrix& x, const QuantConfig& q) {
  const auto& cfg = net.config();
  if (x.cols() != cfg.inputs) throw ShapeError("forward: input has wrong feature count");
  if (x.rows() < 2 && cfg.norm != NormKind::None) {
    throw DomainError("forward: batch norm needs a batch of at least 2");
  }
  ForwardResult out;
  const auto& layers = net.layers();
  out.caches.reserve(layers.size());
  Matrix act = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerState& layer = layers[l];
    LayerCache cache;
    cache.quantized = layer_quantized(q, l, layers.size());
    cache.input_raw = act;
    if (cache.quantized) {
      cache.input = fake_quantize(act, q.activation_bits,
                                  ClampPolicy::chunked_average(q.activation_chunks),
                                  Rounding::Nearest, nullptr, &cache.input_clamp);
      cache.weights_used = fake_quantize(layer.weights, q.weight_bits, ClampPolicy::abs_max_min(),
                                         Rounding::Nearest, nullptr);
    } else {
      cache.input = act;
      cache.weights_used = layer.weights;
    }
    cache.pre_norm = matmul_bt(cache.input, cache.weights_used);
    if (!layer.bias.empty()) {
      for (std::size_t r = 0; r < cache.pre_norm.rows(); ++r)
        for (std::size_t c = 0; c < cache.pre_norm.cols(); ++c) cache.pre_norm(r, c) += layer.bias[c];
    }
    if (layer.hidden) {
      cache.post_norm = cfg.norm == NormKind::None
                            ? cache.pre_norm
                            : norm_forward(cfg.norm, cache.pre_norm, layer.bn, cfg.affine);
      act = relu(cache.post_norm);
    } else {
      act = cache.pre_norm;
    }
    out.caches.push_back(std::move(cache));
  }
  out.logits = std::move(act);
  return out;
}

double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* grad) {
  if (labels.size() != logits.rows()) throw ShapeError("softmax_cross_entropy: label count mismatch");
  const double inv_n = 1.0 / static_cast<double>(logits.rows());
  if (grad) *grad = Matrix(logits.rows(), logits.cols());
  double loss = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols()) {
      throw DomainError("softmax_cross_entropy: label out of range");
    }
    const double peak = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - peak);
    const double log_z = std::log(z) + peak;
    loss += log_z - row[static_cast<std::size_t>(y)];
    if (grad) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        const double p = std::exp(row[c] - log_z);
        (*grad)(r, c) = inv_n * (p - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0));
      }
    }
  }
  return loss * inv_n;
}

BackwardResult backward_bifurcated(const Mlp& net, const ForwardResult& fwd,
                                   const Matrix& logits_grad, const QuantConfig& q,
                                   bool quantize_gradients, CounterRng& rng) {
  const auto& cfg = net.config();
  const auto& layers = net.layers();
  if (fwd.caches.size() != layers.size()) throw DomainError("backward: missing forward caches");
  if (!logits_grad.same_shape(fwd.logits)) throw ShapeError("backward: upstream shape mismatch");

  BackwardResult out;
  out.grads.resize(layers.size());
  out.layer_grads_low.resize(layers.size());
  out.layer_grads.resize(layers.size());

  Matrix upstream = logits_grad;  // dL/d(output of block l)
  for (std::size_t idx = layers.size(); idx-- > 0;) {
    const LayerState& layer = layers[idx];
    const LayerCache& cache = fwd.caches[idx];
    LayerGradients& g = out.grads[idx];

    Matrix g_pre = upstream;  // becomes dL/dz, the g_l of this layer
    if (layer.hidden) {
      for (std::size_t i = 0; i < g_pre.size(); ++i) {
        if (cache.post_norm.data()[i] <= 0.0) g_pre.data()[i] = 0.0;
      }
      if (cfg.norm != NormKind::None) {
        BnGradients bn = norm_backward(cfg.norm, cache.pre_norm, g_pre, layer.bn, cfg.affine);
        g_pre = std::move(bn.input_grad);
        if (cfg.affine) {
          g.gamma = std::move(bn.gamma_grad);
          g.beta = std::move(bn.beta_grad);
        }
      }
    }

    Matrix g_low = g_pre;
    Matrix g_high = g_pre;
    if (quantize_gradients && cache.quantized) {
      const auto& bif = q.bifurcation;
      g_low = fake_quantize(g_pre, bif.low_bits, ClampPolicy::abs_max_min(), Rounding::Stochastic,
                            &rng);
      if (!bif.enabled) {
        g_high = g_low;
      } else if (bif.high_bits) {
        g_high = fake_quantize(g_pre, *bif.high_bits, ClampPolicy::abs_max_min(),
                               Rounding::Nearest, nullptr);
      }
    }

    g.weights = matmul_at(g_high, cache.input);  // out x in
    if (!layer.bias.empty()) g.bias = column_sums(g_high);

    if (idx > 0) {
      Matrix g_in = matmul(g_low, cache.weights_used);  // n x in
      if (cache.input_clamp) {
        const ClampRange& range = *cache.input_clamp;
        for (std::size_t i = 0; i < g_in.size(); ++i) {
          if (!range.contains(cache.input_raw.data()[i])) g_in.data()[i] = 0.0;
        }
      }
      upstream = std::move(g_in);
    }
    out.layer_grads[idx] = std::move(g_pre);
    out.layer_grads_low[idx] = std::move(g_low);
  }
  return out;
}

std::vector<double> flatten(const std::vector<LayerGradients>& grads) {
  std::vector<double> flat;
  for (const auto& g : grads) {
    flat.insert(flat.end(), g.weights.data().begin(), g.weights.data().end());
    flat.insert(flat.end(), g.bias.begin(), g.bias.end());
    flat.insert(flat.end(), g.gamma.begin(), g.gamma.end());
    flat.insert(flat.end(), g.beta.begin(), g.beta.end());
  }
  return flat;
}

}  // namespace qgeom::train
