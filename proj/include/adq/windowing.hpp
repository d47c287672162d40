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

#ifndef ADQ_WINDOWING_HPP_
#define ADQ_WINDOWING_HPP_

#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adq/common.hpp"
#include "json.hpp"

namespace adq {

/// One sensor sample. An empty `value` is a missing measurement.
struct Reading {
  std::int64_t timestamp = 0;  // milliseconds, non-decreasing within a stream
  std::optional<double> value;

  friend bool operator==(const Reading&, const Reading&) = default;
};

/// A fixed-count slice of a stream. Only the last window of a stream may be
/// shorter than the configured length, and it is then flagged `terminal`.
struct DataWindow {
  std::uint64_t window_id = 0;
  std::vector<Reading> readings;
  bool terminal = false;

  std::size_t size() const { return readings.size(); }

  friend bool operator==(const DataWindow&, const DataWindow&) = default;
};

struct WindowValues {
  std::vector<double> present;
  std::size_t missing_count = 0;
};

inline WindowValues window_values(const DataWindow& window) {
  WindowValues out;
  out.present.reserve(window.readings.size());
  for (const auto& r : window.readings) {
    if (r.value) {
      out.present.push_back(*r.value);
    } else {
      ++out.missing_count;
    }
  }
  return out;
}

inline void check_ordered(std::span<const Reading> readings) {
  for (std::size_t i = 1; i < readings.size(); ++i) {
    if (readings[i].timestamp < readings[i - 1].timestamp) {
      throw StreamError("readings out of order at index " + std::to_string(i) + ": timestamp " +
                        std::to_string(readings[i].timestamp) + " follows " +
                        std::to_string(readings[i - 1].timestamp));
    }
  }
}

/// Splits `readings` into consecutive windows of `window_len` readings. A
/// trailing remainder becomes a shorter window flagged terminal.
inline std::vector<DataWindow> segment_stream(std::span<const Reading> readings,
                                              std::size_t window_len,
                                              std::uint64_t first_window_id = 0) {
  if (window_len == 0) throw ConfigError("window_len must be at least 1");
  check_ordered(readings);
  std::vector<DataWindow> windows;
  windows.reserve((readings.size() + window_len - 1) / window_len);
  for (std::size_t start = 0; start < readings.size(); start += window_len) {
    const std::size_t end = std::min(readings.size(), start + window_len);
    DataWindow w;
    w.window_id = first_window_id + windows.size();
    w.readings.assign(readings.begin() + static_cast<std::ptrdiff_t>(start),
                      readings.begin() + static_cast<std::ptrdiff_t>(end));
    w.terminal = (end - start) < window_len;
    windows.push_back(std::move(w));
  }
  return windows;
}

inline std::vector<Reading> flatten(std::span<const DataWindow> windows) {
  std::vector<Reading> out;
  for (const auto& w : windows) out.insert(out.end(), w.readings.begin(), w.readings.end());
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line_no) {
  T out{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw StreamError("line " + std::to_string(line_no) + ": cannot parse number '" +
                      std::string(text) + "'");
  }
  return out;
}

}  // namespace detail

/// Reads `timestamp,value` CSV. The header line is required; an empty value
/// field is a missing reading.
inline std::vector<Reading> read_stream_csv(std::istream& in) {
  std::vector<Reading> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (!header_seen) {
      if (text != "timestamp,value") {
        throw StreamError("line " + std::to_string(line_no) + ": expected header 'timestamp,value'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) {
      throw StreamError("line " + std::to_string(line_no) + ": expected two fields");
    }
    Reading r;
    r.timestamp = detail::parse_number<std::int64_t>(detail::trim(text.substr(0, comma)), line_no);
    const auto value = detail::trim(text.substr(comma + 1));
    if (!value.empty()) r.value = detail::parse_number<double>(value, line_no);
    out.push_back(r);
  }
  check_ordered(out);
  return out;
}

/// Reads line-delimited `{"t": <int>, "v": <number|null>}` objects.
inline std::vector<Reading> read_stream_jsonl(std::istream& in) {
  std::vector<Reading> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw StreamError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("t") || !j["t"].is_number_integer()) {
      throw StreamError("line " + std::to_string(line_no) + ": missing integer field 't'");
    }
    Reading r;
    r.timestamp = j["t"].get<std::int64_t>();
    if (j.contains("v") && !j["v"].is_null()) {
      if (!j["v"].is_number()) {
        throw StreamError("line " + std::to_string(line_no) + ": field 'v' must be a number or null");
      }
      r.value = j["v"].get<double>();
    }
    out.push_back(r);
  }
  check_ordered(out);
  return out;
}

inline void write_stream_csv(std::ostream& out, std::span<const Reading> readings) {
  out << "timestamp,value\n";
  for (const auto& r : readings) {
    out << r.timestamp << ',';
    if (r.value) out << nlohmann::json(*r.value).dump();
    out << '\n';
  }
}

inline void write_stream_jsonl(std::ostream& out, std::span<const Reading> readings) {
  for (const auto& r : readings) {
    nlohmann::json j = {{"t", r.timestamp}, {"v", nullptr}};
    if (r.value) j["v"] = *r.value;
    out << j.dump() << '\n';
  }
}

}  // namespace adq

#endif  // ADQ_WINDOWING_HPP_
