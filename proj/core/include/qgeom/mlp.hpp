// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qgeom/matrix.hpp"
#include "qgeom/quantizers.hpp"
#include "qgeom/range_bn.hpp"
#include "qgeom/rng.hpp"

namespace qgeom::train {

enum class NormKind { None, Standard, Range };

struct NetConfig {
  std::size_t inputs = 2;
  std::vector<std::size_t> hidden{32, 32};
  std::size_t outputs = 4;
  NormKind norm = NormKind::Range;
  bool affine = true;
};

/// Two copies of the layer gradient g_l: a low-precision one that feeds
/// g_{l-1} = g_l W_l and a high-precision one that feeds g_W = g_l^T I_l.
/// high_bits == nullopt keeps the high copy in full precision.
struct BifurcationConfig {
  bool enabled = true;
  int low_bits = 8;
  std::optional<int> high_bits;
};

struct QuantConfig {
  bool enabled = false;
  int weight_bits = 8;
  int activation_bits = 8;
  int activation_chunks = 4;  // K for the chunked-average activation clamp
  bool pin_first_last = false;
  BifurcationConfig bifurcation;
};

/// One hidden or output block: linear -> [norm -> ReLU] (norm/ReLU on
/// hidden layers only). Master weights are always full precision.
struct LayerState {
  Matrix weights;  // out x in
  std::vector<double> bias;  // empty when a norm layer follows
  BnParams bn;               // empty gamma/beta without a norm layer
  bool hidden = true;
};

class Mlp {
 public:
  Mlp(const NetConfig& cfg, std::uint64_t seed);

  const NetConfig& config() const noexcept { return cfg_; }
  std::vector<LayerState>& layers() noexcept { return layers_; }
  const std::vector<LayerState>& layers() const noexcept { return layers_; }

  /// Mutable views of every parameter block in a fixed order: per layer
  /// weights, bias, gamma, beta (empty blocks skipped).
  std::vector<std::span<double>> parameter_blocks();
  std::size_t parameter_count() const;

 private:
  NetConfig cfg_;
  std::vector<LayerState> layers_;
};

struct LayerCache {
  Matrix input_raw;   // I_l before quantization
  Matrix input;       // I_l as multiplied (quantized when the layer is)
  std::optional<ClampRange> input_clamp;
  Matrix weights_used;
  Matrix pre_norm;    // I_l W^T + b
  Matrix post_norm;   // after batch norm, before ReLU
  bool quantized = false;
};

struct ForwardResult {
  Matrix logits;
  std::vector<LayerCache> caches;
};

/// Whether layer `index` of `count` runs quantized under `q`.
bool layer_quantized(const QuantConfig& q, std::size_t index, std::size_t count);

/// Forward pass with GEMMLOWP-quantized weights (abs max/min clamp) and
/// activations (chunked-average clamp), round to nearest.
ForwardResult forward(const Mlp& net, const Matrix& x, const QuantConfig& q);

/// Mean softmax cross-entropy over the batch; writes dL/dlogits if asked.
double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels,
                             Matrix* grad = nullptr);

struct LayerGradients {
  Matrix weights;
  std::vector<double> bias;
  std::vector<double> gamma;
  std::vector<double> beta;
};

struct BackwardResult {
  std::vector<LayerGradients> grads;
  /// Per layer: the g_l actually used for g_{l-1} (low copy when quantized).
  std::vector<Matrix> layer_grads_low;
  /// Per layer: exact g_l in this pass before gradient quantization.
  std::vector<Matrix> layer_grads;
};

/// Backward pass. With `quantize_gradients` and a quantized layer, g_l is
/// quantized to bifurcation.low_bits with stochastic rounding for g_{l-1};
/// g_W uses the high copy when bifurcation is enabled and the low copy
/// otherwise. Quantizers are straight-through inside their clamp range and
/// block gradient outside it. Range BN uses the max/min subgradient.
BackwardResult backward_bifurcated(const Mlp& net, const ForwardResult& fwd,
                                   const Matrix& logits_grad, const QuantConfig& q,
                                   bool quantize_gradients, CounterRng& rng);

/// Gradients flattened in parameter_blocks() order.
std::vector<double> flatten(const std::vector<LayerGradients>& grads);

/// Quantize-dequantize a matrix with one tensor-wide GEMMLOWP scale.
Matrix fake_quantize(const Matrix& m, int bits, const ClampPolicy& clamp, Rounding rounding,
                     CounterRng* rng, std::optional<ClampRange>* range_out = nullptr);

}  // namespace qgeom::train
