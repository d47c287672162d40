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

#include <gtest/gtest.h>

#include "adq/generator.hpp"
#include "support.hpp"

namespace adq {
namespace {

double window_mean(const DataWindow& w) {
  auto v = window_values(w).present;
  double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

TEST(Generator, ShapeAndTimestamps) {
  PumpStreamConfig c;
  c.n_windows = 5;
  c.window_len = 20;
  c.tick_ms = 3;
  auto r = generate_pump_stream(c);
  ASSERT_EQ(r.size(), 100u);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(r[i].timestamp, static_cast<std::int64_t>(3 * i));
  auto w = segment_stream(r, 20);
  EXPECT_EQ(w.size(), 5u);
}

TEST(Generator, NoiselessPumpEventFollowsTheDecay) {
  PumpStreamConfig c;
  c.n_windows = 1;
  c.window_len = 4;
  c.noise_std = 0;
  auto r = generate_pump_stream(c);
  EXPECT_EQ(*r[0].value, 100.0);
  EXPECT_DOUBLE_EQ(*r[2].value, 100.0 * std::exp(-0.25));
}

TEST(Generator, DeterministicPerSeed) {
  PumpStreamConfig c;
  c.n_windows = 10;
  EXPECT_EQ(generate_pump_stream(c), generate_pump_stream(c));
  auto d = c;
  d.seed = 2;
  EXPECT_NE(generate_pump_stream(c), generate_pump_stream(d));
}

TEST(Generator, MeanShiftMovesWindowMean) {
  PumpStreamConfig c;
  c.n_windows = 20;
  c.window_len = 500;
  c.drift_events = {{10, DriftKind::kMeanShift, 7.0}};
  auto w = segment_stream(generate_pump_stream(c), c.window_len);
  EXPECT_NEAR(window_mean(w[15]) - window_mean(w[5]), 7.0, 0.3);
  EXPECT_EQ(pump_params_at(c, 9).offset, 0.0);
  EXPECT_EQ(pump_params_at(c, 10).offset, 7.0);
}

TEST(Generator, EventsAccumulate) {
  PumpStreamConfig c;
  c.n_windows = 30;
  c.drift_events = {{5, DriftKind::kNoiseChange, 1.0}, {10, DriftKind::kDecayChange, 0.25}, {20, DriftKind::kNoiseChange, -5}};
  EXPECT_EQ(pump_params_at(c, 12).noise_std, 2.0);
  EXPECT_EQ(pump_params_at(c, 12).decay_rate, 0.75);
  EXPECT_EQ(pump_params_at(c, 25).noise_std, 0.0);
}

TEST(Generator, MissingRate) {
  PumpStreamConfig c;
  c.n_windows = 50;
  c.missing_rate = 0.2;
  std::size_t missing = 0;
  auto r = generate_pump_stream(c);
  for (const auto& x : r) missing += x.value ? 0 : 1;
  EXPECT_NEAR(static_cast<double>(missing) / r.size(), 0.2, 0.01);
}

TEST(Generator, Validation) {
  PumpStreamConfig c;
  c.n_windows = 10;
  c.drift_events = {{5, DriftKind::kMeanShift, 1}, {5, DriftKind::kMeanShift, 1}};
  EXPECT_THROW(generate_pump_stream(c), ConfigError);
  c.drift_events = {{10, DriftKind::kMeanShift, 1}};
  EXPECT_THROW(generate_pump_stream(c), ConfigError);
  c.drift_events = {};
  c.noise_std = -1;
  EXPECT_THROW(generate_pump_stream(c), ConfigError);
  EXPECT_THROW(parse_drift_kind("teleport"), ConfigError);
  EXPECT_EQ(parse_drift_kind("decay_change"), DriftKind::kDecayChange);
}

}  // namespace
}  // namespace adq
