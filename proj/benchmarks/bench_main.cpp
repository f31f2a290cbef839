// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "qgeom/geometry.hpp"
#include "qgeom/montecarlo.hpp"
#include "qgeom/quantizers.hpp"
#include "qgeom/range_bn.hpp"
#include "qgeom/train_sim.hpp"

using namespace qgeom;

namespace {

std::vector<double> gaussian(std::size_t n) {
  const auto w = mc::sample_gaussian(n, 1.0, 42);
  return {w.values().begin(), w.values().end()};
}

void BM_Binary(benchmark::State& state) {
  const auto w = gaussian(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(quantize_binary(w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Binary)->Arg(1 << 10)->Arg(1 << 16);

void BM_Ternary(benchmark::State& state) {
  const auto w = gaussian(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(quantize_ternary(w, 0.6));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ternary)->Arg(1 << 10)->Arg(1 << 16);

void BM_Midrise8(benchmark::State& state) {
  const auto w = gaussian(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(quantize_uniform_midrise(w, 8, Rounding::Nearest, nullptr));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Midrise8)->Arg(1 << 10)->Arg(1 << 16);

void BM_GemmlowpStochastic(benchmark::State& state) {
  const auto w = gaussian(static_cast<std::size_t>(state.range(0)));
  CounterRng rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        quantize_gemmlowp(w, 8, ClampPolicy::abs_max_min(), Rounding::Stochastic, &rng));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GemmlowpStochastic)->Arg(1 << 10)->Arg(1 << 16);

void BM_Cosine(benchmark::State& state) {
  const auto w = gaussian(static_cast<std::size_t>(state.range(0)));
  const auto q = quantize_binary(w);
  for (auto _ : state) benchmark::DoNotOptimize(cosine_between(w, q));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Cosine)->Arg(1 << 10)->Arg(1 << 16);

void BM_RangeBnForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 64;
  Matrix x(n, d, gaussian(n * d));
  const Matrix up(n, d, 1.0);
  const auto params = BnParams::identity(d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(range_bn_forward(x, params, true));
    benchmark::DoNotOptimize(range_bn_backward(x, up, params, true));
  }
}
BENCHMARK(BM_RangeBnForwardBackward)->Arg(64)->Arg(256);

void BM_McTrialBinary(benchmark::State& state) {
  mc::McConfig cfg;
  cfg.n = 10000;
  cfg.trials = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc::trial_cosines(cfg));
    ++cfg.master_seed;
  }
}
BENCHMARK(BM_McTrialBinary);

void BM_TrainEpoch8Bit(benchmark::State& state) {
  train::TrainConfig cfg;
  cfg.quant.enabled = true;
  cfg.optim.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train::train(cfg));
}
BENCHMARK(BM_TrainEpoch8Bit)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
