// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qgeom/errors.hpp"
#include "qgeom/geometry.hpp"
#include "qgeom/mlp.hpp"
#include "qgeom/theory_bounds.hpp"

using namespace qgeom;
using namespace qgeom::train;

namespace {

Matrix random_batch(std::size_t n, std::size_t d, CounterRng& rng) {
  Matrix m(n, d);
  for (double& v : m.data()) v = 1.5 * rng.normal();
  return m;
}

std::vector<int> random_labels(std::size_t n, std::size_t classes, CounterRng& rng) {
  std::vector<int> y(n);
  for (int& v : y) v = static_cast<int>(rng.below(classes));
  return y;
}

double loss_of(const Mlp& net, const Matrix& x, const std::vector<int>& y) {
  return softmax_cross_entropy(forward(net, x, QuantConfig{}).logits, y);
}

// max_i |g_i - fd_i| / max_i |fd_i|
double gradient_error(Mlp& net, const Matrix& x, const std::vector<int>& y) {
  const QuantConfig fp;
  const ForwardResult fwd = forward(net, x, fp);
  Matrix dlogits;
  softmax_cross_entropy(fwd.logits, y, &dlogits);
  CounterRng rng(0);
  const auto analytic = flatten(backward_bifurcated(net, fwd, dlogits, fp, false, rng).grads);
  std::vector<double> numeric;
  const double h = 1e-6;
  for (auto block : net.parameter_blocks()) {
    for (double& p : block) {
      const double keep = p;
      p = keep + h;
      const double up = loss_of(net, x, y);
      p = keep - h;
      const double down = loss_of(net, x, y);
      p = keep;
      numeric.push_back((up - down) / (2 * h));
    }
  }
  EXPECT_EQ(analytic.size(), numeric.size());
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    diff = std::max(diff, std::fabs(analytic[i] - numeric[i]));
    scale = std::max(scale, std::fabs(numeric[i]));
  }
  return diff / scale;
}

QuantConfig eight_bit(bool bifurcation = true) {
  QuantConfig q;
  q.enabled = true;
  q.bifurcation.enabled = bifurcation;
  return q;
}

}  // namespace

TEST(Mlp, ShapesAndParameterCount) {
  NetConfig cfg;
  cfg.hidden = {5, 7};
  cfg.outputs = 3;
  Mlp net(cfg, 1);
  ASSERT_EQ(net.layers().size(), 3u);
  EXPECT_EQ(net.layers()[0].weights.rows(), 5u);
  EXPECT_EQ(net.layers()[0].weights.cols(), 2u);
  EXPECT_TRUE(net.layers()[0].bias.empty());
  EXPECT_EQ(net.layers()[2].bias.size(), 3u);
  // weights 10 + 35 + 21, gamma/beta 2*(5+7), output bias 3
  EXPECT_EQ(net.parameter_count(), 10u + 35u + 21u + 24u + 3u);
  std::size_t total = 0;
  for (auto b : net.parameter_blocks()) total += b.size();
  EXPECT_EQ(total, net.parameter_count());
}

TEST(Forward, FullPrecisionMatchesPlainReference) {
  NetConfig cfg;
  cfg.hidden = {4};
  cfg.outputs = 3;
  cfg.norm = NormKind::None;
  Mlp net(cfg, 3);
  CounterRng rng(4);
  const Matrix x = random_batch(6, 2, rng);
  const auto& l0 = net.layers()[0];
  const auto& l1 = net.layers()[1];
  const Matrix logits = forward(net, x, QuantConfig{}).logits;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::vector<double> h(4);
    for (std::size_t j = 0; j < 4; ++j) {
      double z = l0.bias[j];
      for (std::size_t i = 0; i < 2; ++i) z += l0.weights(j, i) * x(r, i);
      h[j] = std::max(z, 0.0);
    }
    for (std::size_t k = 0; k < 3; ++k) {
      double z = l1.bias[k];
      for (std::size_t j = 0; j < 4; ++j) z += l1.weights(k, j) * h[j];
      EXPECT_NEAR(logits(r, k), z, 1e-12);
    }
  }
}

TEST(Forward, EightBitWeightDirection) {
  NetConfig cfg;
  cfg.hidden = {32, 32};
  Mlp net(cfg, 5);
  CounterRng rng(6);
  const auto fwd = forward(net, random_batch(64, 2, rng), eight_bit());
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto& w = net.layers()[l].weights;
    const double cos = cosine_between(w.data(), fwd.caches[l].weights_used.data()).cosine;
    EXPECT_GE(cos, theory::nbit_bound_final(8, w.size()) - 0.01) << "layer " << l;
  }
}

TEST(Forward, ZeroBatchIsDegenerate) {
  Mlp net(NetConfig{}, 1);
  EXPECT_THROW(forward(net, Matrix(8, 2, 0.0), QuantConfig{}), DegenerateInputError);
}

TEST(Forward, ShapeAndBatchChecks) {
  Mlp net(NetConfig{}, 1);
  EXPECT_THROW(forward(net, Matrix(8, 3, 1.0), QuantConfig{}), ShapeError);
  EXPECT_THROW(forward(net, Matrix{{1.0, 2.0}}, QuantConfig{}), DomainError);
}

TEST(Backward, FullPrecisionMatchesFiniteDifferencesTwoLayer) {
  CounterRng rng(20);
  NetConfig cfg;
  cfg.hidden = {6};
  cfg.outputs = 3;
  cfg.norm = NormKind::None;
  Mlp net(cfg, 21);
  const Matrix x = random_batch(8, 2, rng);
  EXPECT_LE(gradient_error(net, x, random_labels(8, 3, rng)), 1e-5);
}

TEST(Backward, FullPrecisionMatchesFiniteDifferencesAllNorms) {
  CounterRng rng(2718);
  int checked = 0;
  for (int inst = 0; inst < 60; ++inst) {
    NetConfig cfg;
    cfg.hidden = {2 + rng.below(5), 2 + rng.below(5)};
    cfg.outputs = 2 + rng.below(3);
    cfg.norm = static_cast<NormKind>(inst % 3);
    cfg.affine = inst % 2 == 0;
    Mlp net(cfg, derive_seed(99, inst));
    // Zero biases put dead-ReLU rows exactly on the kink.
    for (auto& layer : net.layers())
      for (double& b : layer.bias) b = 0.1 * rng.normal();
    ASSERT_LE(net.parameter_count(), 500u);
    const std::size_t n = 4 + rng.below(6);
    const Matrix x = random_batch(n, 2, rng);
    EXPECT_LE(gradient_error(net, x, random_labels(n, cfg.outputs, rng)), 1e-4) << "instance " << inst;
    ++checked;
  }
  EXPECT_EQ(checked, 60);
}

TEST(Backward, NoQuantizationEqualsReference) {
  Mlp net(NetConfig{}, 2);
  CounterRng rng(3);
  const Matrix x = random_batch(32, 2, rng);
  const auto fwd = forward(net, x, QuantConfig{});
  Matrix d;
  softmax_cross_entropy(fwd.logits, random_labels(32, 4, rng), &d);
  CounterRng a(1), b(2);
  const auto g1 = flatten(backward_bifurcated(net, fwd, d, QuantConfig{}, true, a).grads);
  const auto g2 = flatten(backward_bifurcated(net, fwd, d, QuantConfig{}, false, b).grads);
  EXPECT_EQ(g1, g2);
}

TEST(Backward, BifurcatedWeightGradUsesFullPrecisionCopy) {
  Mlp net(NetConfig{}, 4);
  CounterRng rng(5);
  const Matrix x = random_batch(32, 2, rng);
  const QuantConfig q = eight_bit(true);
  const auto fwd = forward(net, x, q);
  Matrix d;
  softmax_cross_entropy(fwd.logits, random_labels(32, 4, rng), &d);
  CounterRng grad_rng(6);
  const auto bwd = backward_bifurcated(net, fwd, d, q, true, grad_rng);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const Matrix expected = matmul_at(bwd.layer_grads[l], fwd.caches[l].input);
    EXPECT_EQ(bwd.grads[l].weights, expected) << "layer " << l;
    EXPECT_NE(bwd.layer_grads_low[l], bwd.layer_grads[l]) << "layer " << l;
  }
}

TEST(Backward, WithoutBifurcationWeightGradUsesLowCopy) {
  Mlp net(NetConfig{}, 4);
  CounterRng rng(5);
  const Matrix x = random_batch(32, 2, rng);
  const QuantConfig q = eight_bit(false);
  const auto fwd = forward(net, x, q);
  Matrix d;
  softmax_cross_entropy(fwd.logits, random_labels(32, 4, rng), &d);
  CounterRng grad_rng(6);
  const auto bwd = backward_bifurcated(net, fwd, d, q, true, grad_rng);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    EXPECT_EQ(bwd.grads[l].weights, matmul_at(bwd.layer_grads_low[l], fwd.caches[l].input));
  }
}

TEST(Backward, SixteenBitHighCopy) {
  Mlp net(NetConfig{}, 4);
  CounterRng rng(5);
  const Matrix x = random_batch(32, 2, rng);
  QuantConfig q = eight_bit(true);
  q.bifurcation.high_bits = 16;
  const auto fwd = forward(net, x, q);
  Matrix d;
  softmax_cross_entropy(fwd.logits, random_labels(32, 4, rng), &d);
  CounterRng grad_rng(6);
  const auto bwd = backward_bifurcated(net, fwd, d, q, true, grad_rng);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const Matrix exact = matmul_at(bwd.layer_grads[l], fwd.caches[l].input);
    EXPECT_GT(cosine_between(bwd.grads[l].weights.data(), exact.data()).cosine, 0.99999);
  }
}

TEST(Backward, MissingCachesRejected) {
  Mlp net(NetConfig{}, 4);
  ForwardResult empty;
  CounterRng rng(1);
  EXPECT_THROW(backward_bifurcated(net, empty, Matrix(4, 4), QuantConfig{}, false, rng),
               DomainError);
}

TEST(Ste, BlocksGradientOutsideClampRange) {
  NetConfig cfg;
  cfg.hidden = {8};
  cfg.norm = NormKind::None;
  Mlp net(cfg, 8);
  CounterRng rng(9);
  Matrix x = random_batch(16, 2, rng);
  x(0, 0) = 50.0;  // far outside the chunk-averaged clamp of the input tensor
  QuantConfig q = eight_bit();
  q.activation_chunks = 4;
  const auto fwd = forward(net, x, q);
  ASSERT_TRUE(fwd.caches[1].input_clamp.has_value());
  Matrix d;
  softmax_cross_entropy(fwd.logits, random_labels(16, 4, rng), &d);
  CounterRng grad_rng(1);
  const auto bwd = backward_bifurcated(net, fwd, d, q, false, grad_rng);
  // The gradient into layer 1 passes only where its raw input was inside the clamp.
  const auto& cache = fwd.caches[1];
  const Matrix g_in = matmul(bwd.layer_grads_low[1], cache.weights_used);
  Matrix upstream_expected = g_in;
  int blocked = 0;
  for (std::size_t i = 0; i < g_in.size(); ++i) {
    if (!cache.input_clamp->contains(cache.input_raw.data()[i])) {
      upstream_expected.data()[i] = 0.0;
      ++blocked;
    }
  }
  EXPECT_GT(blocked, 0);
  const auto& relu_out = fwd.caches[0].post_norm;
  for (std::size_t i = 0; i < g_in.size(); ++i) {
    const double expected = relu_out.data()[i] > 0 ? upstream_expected.data()[i] : 0.0;
    EXPECT_DOUBLE_EQ(bwd.layer_grads[0].data()[i], expected);
  }
}

TEST(GradientQuantizer, StochasticRoundingUnbiased) {
  CounterRng rng(10);
  Matrix g(4, 5);
  for (double& v : g.data()) v = 1e-3 * rng.normal();
  const int reps = 10000;
  std::vector<double> sum(g.size()), sum2(g.size());
  for (int r = 0; r < reps; ++r) {
    const Matrix q = fake_quantize(g, 8, ClampPolicy::abs_max_min(), Rounding::Stochastic, &rng);
    for (std::size_t i = 0; i < g.size(); ++i) {
      sum[i] += q.data()[i];
      sum2[i] += q.data()[i] * q.data()[i];
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double mean = sum[i] / reps;
    const double var = std::max(sum2[i] / reps - mean * mean, 0.0);
    if (var == 0.0) continue;  // clamped by the nudged grid
    const double se = std::sqrt(var / reps);
    EXPECT_LE(std::fabs(mean - g.data()[i]), 4 * se + 1e-15) << i;
  }
}

TEST(GradientQuantizer, ConstantTensorPassesThrough) {
  const Matrix g(3, 3, 0.0);
  std::optional<ClampRange> range;
  const Matrix q = fake_quantize(g, 8, ClampPolicy::abs_max_min(), Rounding::Nearest, nullptr, &range);
  EXPECT_EQ(q, g);
  EXPECT_FALSE(range.has_value());
}

TEST(LayerPinning, FirstAndLastStayFullPrecision) {
  QuantConfig q = eight_bit();
  q.pin_first_last = true;
  EXPECT_FALSE(layer_quantized(q, 0, 3));
  EXPECT_TRUE(layer_quantized(q, 1, 3));
  EXPECT_FALSE(layer_quantized(q, 2, 3));
  EXPECT_FALSE(layer_quantized(QuantConfig{}, 1, 3));
}

TEST(SoftmaxCrossEntropy, UniformLogits) {
  const Matrix logits(2, 4, 0.0);
  const std::vector<int> y{0, 3};
  Matrix g;
  EXPECT_NEAR(softmax_cross_entropy(logits, y, &g), std::log(4.0), 1e-15);
  EXPECT_NEAR(g(0, 0), (0.25 - 1.0) / 2, 1e-15);
  EXPECT_NEAR(g(0, 1), 0.25 / 2, 1e-15);
  EXPECT_THROW(softmax_cross_entropy(logits, std::vector<int>{0, 4}), DomainError);
}
