// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <utility>

#include "commands.hpp"
#include "qgeom/errors.hpp"
#include "qgeom/report_io.hpp"

namespace {

std::string join_args(int argc, char** argv) {
  std::string out = "qgeom";
  for (int i = 1; i < argc; ++i) {
    out += ' ';
    out += argv[i];
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace qgeom::cli;

  CLI::App app{"Quantized vector geometry: bounds, Monte-Carlo sweeps, Range BN and training"};
  app.set_version_flag("--version", std::string(qgeom::version()));
  app.require_subcommand(1);

  TheoryArgs theory;
  auto* th = app.add_subcommand("theory", "Evaluate a closed-form bound");
  th->add_option("formula", theory.formula,
                 "binary | ternary | nbit | nbit-draft | eps-norm | l2-norm | max-gaussian | delta-opt")
      ->required();
  const std::pair<const char*, const char*> theory_keys[] = {
      {"t", "Ternary threshold in units of sigma"},
      {"M", "Bit width"},
      {"N", "Vector dimension"},
      {"sigma", "Gaussian standard deviation"},
      {"delta", "Quantization step"},
      {"k", "Number of levels"},
  };
  for (const auto& [key, help] : theory_keys) {
    th->add_option_function<double>(
        std::string("--") + key, [&theory, key = key](double v) { theory.params[key] = v; }, help);
  }
  th->add_option_function<double>(
      "--max-w", [&theory](double v) { theory.params["max_w"] = v; }, "Largest weight magnitude");
  th->add_flag("--json", theory.json, "Print a JSON object instead of the bare value");

  SweepArgs sweep;
  auto* sw = app.add_subcommand("sweep", "Monte-Carlo sweep against theory, written as CSV");
  sw->add_option("kind", sweep.kind, "threshold | bits")
      ->required()
      ->check(CLI::IsMember({"threshold", "bits"}));
  sw->add_option("--grid", sweep.grid, "start:stop[:step]")->required();
  sw->add_option("--n", sweep.n, "Vector dimension")->capture_default_str();
  sw->add_option("--sigma", sweep.sigma, "Gaussian standard deviation")->capture_default_str();
  sw->add_option("--trials", sweep.trials, "Trials per grid point")->capture_default_str();
  sw->add_option("--seed", sweep.seed, "Master seed (random when omitted)");
  sw->add_option("--jobs", sweep.jobs, "Worker threads")->capture_default_str();
  sw->add_option("--out", sweep.out, "Output file (.csv or .json)");

  RangeBnArgs rbn;
  auto* rb = app.add_subcommand("rangebn", "Range BN sandwich and scale-invariance checks");
  rb->add_option("--n", rbn.n, "Batch size")->capture_default_str();
  rb->add_option("--d", rbn.d, "Features per batch")->capture_default_str();
  rb->add_option("--sigma", rbn.sigma, "Gaussian standard deviation")->capture_default_str();
  rb->add_option("--batches", rbn.batches, "Number of batches")->capture_default_str();
  rb->add_option("--seed", rbn.seed, "Master seed (random when omitted)");
  rb->add_option("--jobs", rbn.jobs, "Worker threads")->capture_default_str();
  rb->add_option("--out", rbn.out, "Also write the JSON report here");

  TrainArgs tr;
  auto* tn = app.add_subcommand("train", "Train the synthetic-task MLP from a config file");
  tn->add_option("config", tr.config, "Config file")->required();
  tn->add_flag("--no-bifurcation", tr.no_bifurcation,
               "Compute weight gradients from the low-precision layer gradient");
  tn->add_option("--seed", tr.seed, "Override [train] seed");
  tn->add_option("--out-dir", tr.out_dir, "Directory for report and histogram files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const std::string command_line = join_args(argc, argv);
  try {
    if (*th) return cmd_theory(theory);
    if (*sw) return cmd_sweep(sweep, command_line);
    if (*rb) return cmd_rangebn(rbn, command_line);
    if (*tn) return cmd_train(tr, command_line);
  } catch (const UsageError& e) {
    std::cerr << "qgeom: " << e.what() << "\n";
    return kUsage;
  } catch (const qgeom::ConfigError& e) {
    std::cerr << "qgeom: " << e.what() << "\n";
    return kUsage;
  } catch (const qgeom::IoError& e) {
    std::cerr << "qgeom: " << e.what() << "\n";
    return kUnwritable;
  } catch (const qgeom::DivergenceError& e) {
    std::cerr << "qgeom: training aborted: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::logic_error& e) {
    std::cerr << "qgeom: " << e.what() << "\n";
    return kUsage;
  } catch (const std::overflow_error& e) {
    std::cerr << "qgeom: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "qgeom: " << e.what() << "\n";
    return kPropertyFailure;
  }
  return kUsage;
}
