// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qgeom/matrix.hpp"
#include "qgeom/mlp.hpp"
#include "qgeom/rng.hpp"

namespace qgeom::train {

enum class DatasetKind { Blobs, Rings };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::Blobs;
  std::size_t points = 2000;
  std::size_t classes = 4;
  double spread = 0.8;       // blob std / ring radial jitter
  double separation = 3.0;   // blob centre offset / ring radius step
};

struct Dataset {
  Matrix x;  // points x 2
  std::vector<int> labels;
};

/// Blobs: class k centred on the k-th point of a circle of radius
/// `separation` with isotropic Gaussian spread. Rings: class k on radius
/// (k + 1) * separation with radial jitter.
Dataset make_dataset(const DatasetConfig& cfg, std::uint64_t seed);

struct OptimConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
};

struct TrainConfig {
  DatasetConfig data;
  NetConfig net;
  QuantConfig quant;
  OptimConfig optim;
  std::uint64_t seed = 7;
  bool trace_angles = true;
  std::size_t histogram_bins = 64;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Per step, per layer cosines against a full-precision reference.
struct AngleTrace {
  /// cos(g_W used for the update, g_W from an unquantized backward on the
  /// same forward pass).
  std::vector<std::vector<double>> weight_grad_cos;
  /// cos(low-precision g_l that feeds g_{l-1}, exact g_l of the same pass).
  std::vector<std::vector<double>> layer_grad_cos;
  /// cos(W, Q(W)) of the weights used in the forward pass.
  std::vector<std::vector<double>> forward_weight_cos;

  double mean_backward_cos() const;
  double mean_forward_cos() const;
};

struct Histogram {
  std::string tensor;  // "activation", "layer_grad" or "weight_grad"
  std::size_t layer = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
};

/// `bins` equal-width bins covering [min, max] of `values`; the max lands in
/// the last bin. A constant tensor puts every count in one bin.
Histogram make_histogram(std::string tensor, std::size_t layer, std::span<const double> values,
                         std::size_t bins);

struct TrainingReport {
  double final_accuracy = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_curve;      // per epoch, mean training loss
  std::vector<double> accuracy_curve;  // per epoch, accuracy on the full set
  AngleTrace trace;
  std::vector<Histogram> histograms;   // final step
  std::size_t steps = 0;
  std::size_t parameter_count = 0;
};

/// Mini-batch SGD with momentum on full-precision master weights. Throws
/// DivergenceError when the loss turns non-finite.
TrainingReport train(const TrainConfig& cfg);

/// Classification accuracy of `net` on `data` with the forward quantizers
/// of `q`, evaluated in batches of at most `batch` rows.
double evaluate_accuracy(const Mlp& net, const Dataset& data, const QuantConfig& q,
                         std::size_t batch, double* loss = nullptr);

/// (1/S) * sum_k StcTern(g_s)^T a over S independent ternarizations of the
/// n x out gradient g_s; a is n x in. Returns out x in. Throws DomainError
/// for S < 1 and ShapeError on row mismatch.
Matrix multi_stochastic_ternarization_update(const Matrix& g_s, const Matrix& a, std::size_t samples,
                                             CounterRng& rng);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace qgeom::train
