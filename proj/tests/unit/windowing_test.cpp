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

#include "adq/windowing.hpp"
#include "support.hpp"

namespace adq {
namespace {

std::vector<Reading> readings(std::size_t n) {
  std::vector<Reading> r;
  for (std::size_t i = 0; i < n; ++i) r.push_back({static_cast<std::int64_t>(i), static_cast<double>(i) * 0.5});
  return r;
}

TEST(SegmentStream, ExactDivision) {
  auto w = segment_stream(readings(10), 5);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].size(), 5u);
  EXPECT_EQ(w[1].size(), 5u);
  EXPECT_FALSE(w[1].terminal);
  EXPECT_EQ(w[1].window_id, 1u);
}

TEST(SegmentStream, TrailingPartialWindowIsTerminal) {
  auto w = segment_stream(readings(7), 5);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].size(), 5u);
  EXPECT_EQ(w[1].size(), 2u);
  EXPECT_TRUE(w[1].terminal);
  EXPECT_FALSE(w[0].terminal);
}

TEST(SegmentStream, EmptyInput) { EXPECT_TRUE(segment_stream(readings(0), 5).empty()); }

TEST(SegmentStream, RejectsUnorderedTimestamps) {
  auto r = readings(6);
  r[3].timestamp = 1;
  try {
    segment_stream(r, 2);
    FAIL() << "expected StreamError";
  } catch (const StreamError& e) {
    EXPECT_NE(std::string(e.what()).find("timestamp"), std::string::npos) << e.what();
  }
}

TEST(SegmentStream, ZeroLengthIsConfigError) { EXPECT_THROW(segment_stream(readings(3), 0), ConfigError); }

TEST(SegmentStream, FlattenRoundTripsForEveryLength) {
  CounterRng rng(3, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = rng.below(300);
    std::vector<Reading> r;
    std::int64_t t = 0;
    for (std::size_t i = 0; i < n; ++i) {
      t += static_cast<std::int64_t>(rng.below(3));
      r.push_back({t, rng.coin() ? std::optional<double>(rng.normal()) : std::nullopt});
    }
    const std::size_t len = 1 + rng.below(40);
    const auto windows = segment_stream(r, len);
    EXPECT_EQ(flatten(windows), r);
    for (std::size_t i = 0; i < windows.size(); ++i) {
      EXPECT_EQ(windows[i].window_id, i);
      if (i + 1 < windows.size()) EXPECT_EQ(windows[i].size(), len);
    }
  }
}

TEST(WindowValues, Examples) {
  auto a = window_values(testing::make_window(0, {1.0, std::nullopt, 3.0}));
  EXPECT_EQ(a.present, (std::vector<double>{1.0, 3.0}));
  EXPECT_EQ(a.missing_count, 1u);
  auto b = window_values(testing::make_window(0, std::vector<std::optional<double>>{std::nullopt, std::nullopt}));
  EXPECT_TRUE(b.present.empty());
  EXPECT_EQ(b.missing_count, 2u);
  auto c = window_values(testing::make_window(0, std::vector<double>{2.0}));
  EXPECT_EQ(c.present, (std::vector<double>{2.0}));
  EXPECT_EQ(c.missing_count, 0u);
}

TEST(WindowValues, CountsAddUp) {
  for (std::uint64_t id = 0; id < 30; ++id) {
    auto w = testing::random_window(5, id, 1 + id * 7, 80, 10, 0.3);
    auto v = window_values(w);
    EXPECT_EQ(v.present.size() + v.missing_count, w.size());
  }
}

TEST(StreamIo, CsvRoundTrip) {
  std::vector<Reading> r = {{0, 1.5}, {1, std::nullopt}, {2, -3.25}, {2, 1e-300}};
  std::stringstream ss;
  write_stream_csv(ss, r);
  EXPECT_EQ(read_stream_csv(ss), r);
}

TEST(StreamIo, JsonlRoundTrip) {
  std::vector<Reading> r = {{10, 0.1}, {11, std::nullopt}, {12, 99.0}};
  std::stringstream ss;
  write_stream_jsonl(ss, r);
  EXPECT_EQ(read_stream_jsonl(ss), r);
}

TEST(StreamIo, CsvParsesMissingAndWhitespace) {
  std::stringstream ss("timestamp,value\n0, 4.5\n1,\n\n2,7\n");
  auto r = read_stream_csv(ss);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].value, 4.5);
  EXPECT_FALSE(r[1].value.has_value());
  EXPECT_EQ(r[2].timestamp, 2);
}

TEST(StreamIo, CsvErrors) {
  std::stringstream no_header("0,1\n");
  EXPECT_THROW(read_stream_csv(no_header), StreamError);
  std::stringstream bad_number("timestamp,value\n0,abc\n");
  EXPECT_THROW(read_stream_csv(bad_number), StreamError);
  std::stringstream unordered("timestamp,value\n5,1\n4,1\n");
  EXPECT_THROW(read_stream_csv(unordered), StreamError);
}

TEST(StreamIo, JsonlErrors) {
  std::stringstream bad("{\"t\": 1, \"v\": \"x\"}\n");
  EXPECT_THROW(read_stream_jsonl(bad), StreamError);
  std::stringstream no_t("{\"v\": 1}\n");
  EXPECT_THROW(read_stream_jsonl(no_t), StreamError);
  std::stringstream garbage("not json\n");
  EXPECT_THROW(read_stream_jsonl(garbage), StreamError);
}

}  // namespace
}  // namespace adq
