/*
 * Copyright 2026 The ADQ Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <sstream>

#include <gtest/gtest.h>

#include "adq/harness.hpp"
#include "support.hpp"

namespace adq {
namespace {

const ExperimentContext& shifted() {
  static const ExperimentContext ctx = [] {
    auto c = testing::small_config(5);
    c.stream.n_windows = 220;
    c.stream.drift_events = {{150, DriftKind::kMeanShift, 10.0}};
    return prepare_experiment(c);
  }();
  return ctx;
}

TEST(Harness, CumulativeMetricsMatchRecomputation) {
  const auto r = run_experiment(shifted(), {Mode::kAdaptive, 0.05, 50, true});
  ASSERT_EQ(r.records.size(), 120u);
  std::vector<double> y, yhat;
  for (const auto& rec : r.records) {
    y.push_back(rec.truth);
    yhat.push_back(rec.prediction);
    EXPECT_EQ(rec.abs_error, std::abs(rec.truth - rec.prediction));
    EXPECT_NEAR(rec.cum_mae, testing::brute_mae(y, yhat), 1e-12);
    if (y.size() >= 2) {
      ASSERT_TRUE(rec.cum_r2.has_value());
      EXPECT_NEAR(*rec.cum_r2, testing::brute_r2(y, yhat), 1e-9);
    } else {
      EXPECT_FALSE(rec.cum_r2.has_value());
    }
  }
  EXPECT_EQ(r.summary.n, 120u);
  EXPECT_EQ(r.summary.final_mae, r.records.back().cum_mae);
  EXPECT_EQ(r.summary.retrains, r.summary.detections.size());
}

TEST(Harness, StandardModeIsExactBeforeDrift) {
  const auto& ctx = shifted();
  const auto r = run_experiment(ctx, {Mode::kStandard, 0.05, 50, true});
  for (const auto& rec : r.records) {
    if (rec.window_id >= 150) break;
    EXPECT_EQ(rec.abs_error, 0.0) << rec.window_id;
    EXPECT_EQ(rec.provenance, Provenance::kStandard);
  }
  EXPECT_EQ(r.summary.retrains, 0u);
  EXPECT_EQ(r.summary.median_ml_ns, 0);
}

TEST(Harness, RunsAreDeterministicApartFromTiming) {
  const auto& ctx = shifted();
  for (auto mode : {Mode::kAdaptive, Mode::kStatic}) {
    const ExperimentParams p{mode, 0.05, 20, true};
    EXPECT_TRUE(without_timing(run_experiment(ctx, p)) == without_timing(run_experiment(ctx, p)));
  }
  auto c = ctx.config;
  const ExperimentParams p{Mode::kAdaptive, 0.05, 20, true};
  EXPECT_TRUE(without_timing(run_experiment(p, c)) == without_timing(run_experiment(ctx, p)));
}

TEST(Harness, CsvRoundTrip) {
  const auto r = run_experiment(shifted(), {Mode::kStatic, 0.05, 20, true});
  std::stringstream ss;
  write_report(ss, r, ReportFormat::kCsv);
  EXPECT_EQ(parse_report_csv(ss), r.records);

  std::stringstream bad("window_id,truth\n1,2\n");
  EXPECT_THROW(parse_report_csv(bad), Error);
}

TEST(Harness, JsonlAndSummary) {
  const auto r = run_experiment(shifted(), {Mode::kAdaptive, 0.01, 20, false});
  std::stringstream lines;
  write_report(lines, r, ReportFormat::kJsonl);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["window_id"].get<std::uint64_t>(), r.records[n].window_id);
    EXPECT_EQ(j["prediction"].get<double>(), r.records[n].prediction);
    ++n;
  }
  EXPECT_EQ(n, r.records.size());

  std::stringstream summary;
  write_report(summary, r, ReportFormat::kSummaryJson);
  ExperimentParams params;
  EXPECT_EQ(parse_summary_json(nlohmann::json::parse(summary.str()), &params), r.summary);
  EXPECT_EQ(params, r.params);
  EXPECT_TRUE(r.summary.detections.empty());
}

TEST(Harness, BenchCoversTheThreeModes) {
  const auto reports = run_bench(shifted());
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports[0].params.mode, Mode::kAdaptive);
  EXPECT_EQ(reports[1].params.mode, Mode::kStatic);
  EXPECT_EQ(reports[2].params.mode, Mode::kStandard);
  for (const auto& r : reports) EXPECT_EQ(r.records.size(), 120u);
}

TEST(Harness, SweepIsMonotoneInTau) {
  const std::vector<double> taus = {0.001, 0.01, 0.05, 0.1, 0.3};
  const auto s = sensitivity_sweep(taus, shifted());
  EXPECT_EQ(s.p_values.size(), 120u);
  std::size_t prev = 0;
  for (double t : taus) {
    EXPECT_GE(s.detections.at(t), prev);
    prev = s.detections.at(t);
  }
  EXPECT_GT(s.detections.at(0.05), 0u);
  const std::vector<double> bad = {0.0};
  EXPECT_THROW(sensitivity_sweep(bad, shifted()), ConfigError);
}

TEST(Harness, TruthFollowsTheRegime) {
  const auto& ctx = shifted();
  ASSERT_EQ(ctx.truth.size(), 120u);
  const auto& art = ctx.development.bundle.standard;
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(ctx.truth[i], score_window_standard(ctx.windows[100 + i], art).unified);
  }
}

TEST(Harness, RejectsBadSplits) {
  auto c = testing::small_config();
  c.train_windows = c.stream.n_windows;
  EXPECT_THROW(prepare_experiment(c), ConfigError);
}

}  // namespace
}  // namespace adq
