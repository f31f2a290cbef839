// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <random>
#include <vector>

#include "qgeom/montecarlo.hpp"
#include "qgeom/report_io.hpp"
#include "qgeom/theory_bounds.hpp"
#include "qgeom/train_config.hpp"
#include "qgeom/train_sim.hpp"

namespace qgeom::cli {
namespace {

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "qgeom: no --seed given, using seed " << s << "\n";
  return s;
}

double parse_real(const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() ||
      !std::isfinite(v)) {
    throw UsageError("invalid grid number '" + text + "'");
  }
  return v;
}

void write_with_manifest(const std::filesystem::path& path, const std::string& content,
                         const RunManifest& manifest) {
  write_text_file(path, content);
  write_text_file(manifest_path(path), manifest_json(manifest).dump(2) + "\n");
}

bool has_json_extension(const std::filesystem::path& p) { return p.extension() == ".json"; }

}  // namespace

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("QGEOM_OUT_DIR"); env && *env) return env;
  return ".";
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = spec.find(':', start);
    parts.push_back(spec.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) {
    throw UsageError("grid must look like start:stop[:step], got '" + spec + "'");
  }
  const double lo = parse_real(parts[0]);
  const double hi = parse_real(parts[1]);
  const double step = parts.size() == 3 ? parse_real(parts[2]) : 1.0;
  if (!(step > 0)) throw UsageError("grid step must be > 0");
  if (hi < lo) throw UsageError("grid stop must be >= start");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 100000) throw UsageError("grid has too many points");
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    // Snap to 12 decimals so 0:1.2:0.05 yields 0.15 rather than 0.15000000000000002.
    grid[i] = std::round((lo + step * static_cast<double>(i)) * 1e12) / 1e12;
  }
  return grid;
}

int cmd_theory(const TheoryArgs& args) {
  const auto id = theory::parse_formula(args.formula);
  if (!id) {
    throw UsageError("unknown formula '" + args.formula +
                     "' (binary, ternary, nbit, nbit-draft, eps-norm, l2-norm, max-gaussian, "
                     "delta-opt)");
  }
  if (*id == theory::FormulaId::MseDecomposition) {
    throw UsageError("'mse' needs weight vectors and is not available from the command line");
  }
  auto params = args.params;
  if (*id == theory::FormulaId::MaxGaussianBound || *id == theory::FormulaId::L2NormExpectation) {
    params.try_emplace("sigma", 1.0);
  }
  const theory::BoundValue v = theory::evaluate(*id, params);
  if (args.json) {
    nlohmann::json j{{"formula", std::string(theory::formula_name(*id))},
                     {"params", params},
                     {"value", v.value}};
    if (*id == theory::FormulaId::MaxGaussianBound) {
      j["lower"] = v.params.at("lower");
      j["upper"] = v.params.at("upper");
    }
    std::cout << j.dump(2) << "\n";
  } else if (*id == theory::FormulaId::MaxGaussianBound) {
    std::printf("%.10g %.10g\n", v.params.at("lower"), v.params.at("upper"));
  } else {
    std::printf("%.10g\n", v.value);
  }
  return kOk;
}

int cmd_sweep(const SweepArgs& args, const std::string& command_line) {
  const std::vector<double> grid = parse_grid(args.grid);
  mc::McConfig cfg;
  cfg.n = args.n;
  cfg.sigma = args.sigma;
  cfg.trials = args.trials;
  cfg.jobs = args.jobs;
  cfg.master_seed = resolve_seed(args.seed);
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }

  mc::SweepResult result;
  if (args.kind == "threshold") {
    if (grid.front() < 0) throw UsageError("threshold grid must be >= 0");
    result = mc::sweep_threshold(cfg, grid);
  } else {
    std::vector<int> bits;
    for (double g : grid) {
      if (g != std::floor(g) || g < 1 || g > 16) {
        throw UsageError("bits grid must contain integers in [1, 16]");
      }
      bits.push_back(static_cast<int>(g));
    }
    result = mc::sweep_bits(cfg, bits);
  }

  const std::filesystem::path out =
      args.out ? *args.out : default_out_dir() / (args.kind + "_sweep.csv");
  RunManifest manifest;
  manifest.command = command_line;
  manifest.config = {{"kind", args.kind}, {"grid", args.grid}, {"n", args.n},
                     {"sigma", args.sigma}, {"trials", args.trials}, {"jobs", args.jobs},
                     {"out", out.string()}};
  manifest.master_seed = cfg.master_seed;
  manifest.timestamp = iso8601_utc_now();
  const std::string content =
      has_json_extension(out) ? sweep_json(result).dump(2) + "\n" : sweep_csv(result);
  write_with_manifest(out, content, manifest);
  std::cout << out.string() << "\n";
  return kOk;
}

int cmd_rangebn(const RangeBnArgs& args, const std::string& command_line) {
  if (args.n < 2) throw UsageError("--n must be >= 2");
  if (args.d < 1 || args.batches < 2) throw UsageError("--d must be >= 1 and --batches >= 2");
  if (!(args.sigma > 0) || !std::isfinite(args.sigma)) throw UsageError("--sigma must be > 0");
  const std::uint64_t seed = resolve_seed(args.seed);
  const auto sandwich = mc::range_sandwich_check(args.n, args.d, args.sigma, args.batches, seed,
                                                 args.jobs);
  const auto invariance = mc::range_scale_invariance_check(args.n, args.d, args.sigma,
                                                           derive_seed(seed, 0xB17));
  const bool pass = sandwich.passed() && invariance.passed();
  nlohmann::json report{{"sandwich", range_sandwich_json(sandwich)},
                        {"scale_invariance", scale_invariance_json(invariance)},
                        {"pass", pass}};
  const std::string text = report.dump(2) + "\n";
  std::cout << text;
  if (args.out) {
    RunManifest manifest;
    manifest.command = command_line;
    manifest.config = {{"n", args.n}, {"d", args.d}, {"sigma", args.sigma},
                       {"batches", args.batches}, {"jobs", args.jobs}};
    manifest.master_seed = seed;
    manifest.timestamp = iso8601_utc_now();
    write_with_manifest(*args.out, text, manifest);
  }
  if (!pass) std::cerr << "qgeom rangebn: property check failed\n";
  return pass ? kOk : kPropertyFailure;
}

int cmd_train(const TrainArgs& args, const std::string& command_line) {
  train::TrainConfig cfg = train::load_train_config(args.config);
  if (args.no_bifurcation) cfg.quant.bifurcation.enabled = false;
  if (args.seed) cfg.seed = *args.seed;
  const train::TrainingReport report = train::train(cfg);

  const std::filesystem::path dir = args.out_dir ? *args.out_dir : default_out_dir();
  std::string stem = args.config.stem().string();
  if (args.no_bifurcation) stem += "_nobif";
  RunManifest manifest;
  manifest.command = command_line;
  manifest.config = {{"ini", train::to_ini(cfg)}};
  manifest.master_seed = cfg.seed;
  manifest.timestamp = iso8601_utc_now();
  const auto report_path = dir / (stem + ".report.json");
  const auto hist_path = dir / (stem + ".histograms.csv");
  write_with_manifest(report_path, training_json(report).dump(2) + "\n", manifest);
  write_with_manifest(hist_path, histograms_csv(report.histograms), manifest);

  nlohmann::json summary{{"final_accuracy", report.final_accuracy},
                         {"final_loss", report.final_loss},
                         {"steps", report.steps},
                         {"report", report_path.string()},
                         {"histograms", hist_path.string()}};
  if (!report.trace.weight_grad_cos.empty()) {
    summary["mean_backward_cos"] = report.trace.mean_backward_cos();
    summary["mean_forward_cos"] = report.trace.mean_forward_cos();
  }
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

}  // namespace qgeom::cli
