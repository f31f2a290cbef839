// SPDX-License-Identifier: Apache-2.0

#include "qgeom/report_io.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>

#include "qgeom/errors.hpp"

namespace qgeom {
namespace {

nlohmann::json layer_series(const std::vector<std::vector<double>>& steps) {
  auto out = nlohmann::json::array();
  for (const auto& row : steps) out.push_back(row);
  return out;
}

}  // namespace

const char* version() noexcept { return QGEOM_VERSION; }

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string sweep_csv(const mc::SweepResult& result) {
  std::string out = "param,emp_cos,se,theory_cos,emp_angle,theory_angle\n";
  for (const auto& r : result.rows) {
    out += format_real(r.param) + ',' + format_real(r.empirical_mean_cos) + ',' +
           format_real(r.empirical_se) + ',' + format_real(r.theory_cos) + ',' +
           format_real(r.empirical_angle_deg) + ',' + format_real(r.theory_angle_deg) + '\n';
  }
  return out;
}

nlohmann::json sweep_json(const mc::SweepResult& result) {
  auto rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"param", r.param},
                    {"emp_cos", r.empirical_mean_cos},
                    {"se", r.empirical_se},
                    {"theory_cos", r.theory_cos},
                    {"emp_angle", r.empirical_angle_deg},
                    {"theory_angle", r.theory_angle_deg}});
  }
  return {{"rows", rows}};
}

nlohmann::json training_json(const train::TrainingReport& report) {
  nlohmann::json j;
  j["final_accuracy"] = report.final_accuracy;
  j["final_loss"] = report.final_loss;
  j["steps"] = report.steps;
  j["parameter_count"] = report.parameter_count;
  j["loss_curve"] = report.loss_curve;
  j["accuracy_curve"] = report.accuracy_curve;
  nlohmann::json trace;
  trace["weight_grad_cos"] = layer_series(report.trace.weight_grad_cos);
  trace["layer_grad_cos"] = layer_series(report.trace.layer_grad_cos);
  trace["forward_weight_cos"] = layer_series(report.trace.forward_weight_cos);
  if (!report.trace.weight_grad_cos.empty()) {
    trace["mean_backward_cos"] = report.trace.mean_backward_cos();
    trace["mean_forward_cos"] = report.trace.mean_forward_cos();
  }
  j["angle_trace"] = trace;
  return j;
}

std::string histograms_csv(const std::vector<train::Histogram>& histograms) {
  std::string out = "tensor,layer,bin,lo,hi,count\n";
  for (const auto& h : histograms) {
    const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      const double lo = h.lo + width * static_cast<double>(b);
      const double hi = b + 1 == h.counts.size() ? h.hi : h.lo + width * static_cast<double>(b + 1);
      out += h.tensor + ',' + std::to_string(h.layer) + ',' + std::to_string(b) + ',' +
             format_real(lo) + ',' + format_real(hi) + ',' + std::to_string(h.counts[b]) + '\n';
    }
  }
  return out;
}

nlohmann::json range_sandwich_json(const mc::RangeSandwichReport& r) {
  return {{"n", r.n},           {"d", r.d},         {"sigma", r.sigma},
          {"batches", r.batches}, {"mean_ratio", r.mean_ratio}, {"se", r.se},
          {"lower", r.lower},   {"upper", r.upper}, {"pass", r.passed()}};
}

nlohmann::json scale_invariance_json(const mc::ScaleInvarianceReport& r) {
  return {{"factors", r.factors},
          {"max_abs_diff", r.max_abs_diff},
          {"tolerance", r.tolerance},
          {"pass", r.passed()}};
}

bool RunManifest::same_run(const RunManifest& other) const {
  return command == other.command && config == other.config && master_seed == other.master_seed &&
         tool_version == other.tool_version;
}

std::string iso8601_utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json manifest_json(const RunManifest& m) {
  return {{"command", m.command},
          {"config", m.config},
          {"master_seed", m.master_seed},
          {"tool_version", m.tool_version},
          {"timestamp", m.timestamp}};
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::filesystem::path manifest_path(const std::filesystem::path& data_file) {
  return std::filesystem::path(data_file.string() + ".manifest.json");
}

}  // namespace qgeom
