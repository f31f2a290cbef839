// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgeom/montecarlo.hpp"
#include "qgeom/train_sim.hpp"

namespace qgeom {

const char* version() noexcept;

/// Shortest round-trip decimal text, '.' separator regardless of locale.
std::string format_real(double v);

/// Header param,emp_cos,se,theory_cos,emp_angle,theory_angle; '\n' endings.
std::string sweep_csv(const mc::SweepResult& result);
nlohmann::json sweep_json(const mc::SweepResult& result);

nlohmann::json training_json(const train::TrainingReport& report);
/// One row per bin: tensor,layer,bin,lo,hi,count.
std::string histograms_csv(const std::vector<train::Histogram>& histograms);

nlohmann::json range_sandwich_json(const mc::RangeSandwichReport& r);
nlohmann::json scale_invariance_json(const mc::ScaleInvarianceReport& r);

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t master_seed = 0;
  std::string tool_version = version();
  std::string timestamp;  // ISO-8601 UTC

  /// Equality ignores the timestamp.
  bool same_run(const RunManifest& other) const;
};

std::string iso8601_utc_now();
nlohmann::json manifest_json(const RunManifest& m);

/// Writes `content` to `path` (binary mode). Throws IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Sidecar path for a data file: "<path>.manifest.json".
std::filesystem::path manifest_path(const std::filesystem::path& data_file);

}  // namespace qgeom
