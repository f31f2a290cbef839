// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qgeom::cli {

enum ExitCode : int {
  kOk = 0,
  kPropertyFailure = 1,
  kUsage = 2,
  kUnwritable = 3,
  kDiverged = 4,
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TheoryArgs {
  std::string formula;
  std::map<std::string, double> params;
  bool json = false;
};

struct SweepArgs {
  std::string kind;  // threshold | bits
  std::string grid;
  std::size_t n = 10000;
  double sigma = 1.0;
  std::size_t trials = 100;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::optional<std::filesystem::path> out;
};

struct RangeBnArgs {
  std::size_t n = 256;
  std::size_t d = 8;
  double sigma = 1.0;
  std::size_t batches = 10000;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::optional<std::filesystem::path> out;
};

struct TrainArgs {
  std::filesystem::path config;
  bool no_bifurcation = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
};

int cmd_theory(const TheoryArgs& args);
int cmd_sweep(const SweepArgs& args, const std::string& command_line);
int cmd_rangebn(const RangeBnArgs& args, const std::string& command_line);
int cmd_train(const TrainArgs& args, const std::string& command_line);

/// Parses "a:b[:step]" into an inclusive ascending grid. Step defaults to 1.
std::vector<double> parse_grid(const std::string& spec);

/// QGEOM_OUT_DIR when set, else the working directory.
std::filesystem::path default_out_dir();

}  // namespace qgeom::cli
