// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <clocale>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qgeom/errors.hpp"
#include "qgeom/report_io.hpp"

using namespace qgeom;

TEST(FormatReal, ShortestRoundTrip) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(2.0), "2");
  EXPECT_EQ(format_real(-1.5e-20), "-1.5e-20");
  const double v = 0.7978845608028654;
  EXPECT_EQ(std::stod(format_real(v)), v);
}

TEST(SweepCsv, HeaderAndRows) {
  mc::SweepResult r;
  r.rows.push_back({0.5, 0.9, 0.001, 0.89, 25.8, 27.1});
  EXPECT_EQ(sweep_csv(r),
            "param,emp_cos,se,theory_cos,emp_angle,theory_angle\n0.5,0.9,0.001,0.89,25.8,27.1\n");
  const auto j = sweep_json(r);
  EXPECT_EQ(j["rows"][0]["theory_cos"], 0.89);
}

TEST(SweepCsv, IgnoresLocale) {
  const char* old = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = old ? old : "C";
  if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8") == nullptr) GTEST_SKIP() << "locale unavailable";
  mc::SweepResult r;
  r.rows.push_back({0.25, 0.5, 0.0, 0.5, 60.0, 60.0});
  const auto csv = sweep_csv(r);
  std::setlocale(LC_NUMERIC, saved.c_str());
  EXPECT_NE(csv.find("0.25,0.5"), std::string::npos);
}

TEST(HistogramCsv, OneRowPerBin) {
  train::Histogram h{"activation", 1, 0.0, 1.0, {3, 1}, 4};
  EXPECT_EQ(histograms_csv({h}),
            "tensor,layer,bin,lo,hi,count\nactivation,1,0,0,0.5,3\nactivation,1,1,0.5,1,1\n");
}

TEST(Manifest, EqualityIgnoresTimestamp) {
  RunManifest a{"qgeom sweep", {{"n", 3}}, 7, "0.3.0", "2020-01-01T00:00:00Z"};
  RunManifest b = a;
  b.timestamp = iso8601_utc_now();
  EXPECT_TRUE(a.same_run(b));
  b.master_seed = 8;
  EXPECT_FALSE(a.same_run(b));
  const auto j = manifest_json(a);
  EXPECT_EQ(j["master_seed"], 7);
  EXPECT_EQ(j["tool_version"], "0.3.0");
  EXPECT_EQ(iso8601_utc_now().size(), 20u);
}

TEST(WriteFile, RoundTripAndFailure) {
  const auto dir = std::filesystem::temp_directory_path() / "qgeom_report_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "x.csv";
  write_text_file(path, "a\nb\n");
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "a\nb\n");
  EXPECT_EQ(manifest_path(path).filename(), "x.csv.manifest.json");
  EXPECT_THROW(write_text_file("/nonexistent/dir/x.csv", "z"), IoError);
  std::filesystem::remove_all(dir);
}

TEST(TrainingJson, Fields) {
  train::TrainingReport r;
  r.final_accuracy = 0.9;
  r.loss_curve = {1.0, 0.5};
  r.trace.weight_grad_cos = {{1.0, 0.9}};
  r.trace.layer_grad_cos = {{1.0, 0.8}};
  r.trace.forward_weight_cos = {{0.99, 0.98}};
  const auto j = training_json(r);
  EXPECT_EQ(j["final_accuracy"], 0.9);
  EXPECT_EQ(j["angle_trace"]["weight_grad_cos"][0][1], 0.9);
  EXPECT_DOUBLE_EQ(j["angle_trace"]["mean_backward_cos"].get<double>(), 0.95);
}
