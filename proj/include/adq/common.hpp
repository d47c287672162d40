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

#ifndef ADQ_COMMON_HPP_
#define ADQ_COMMON_HPP_

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace adq {

/// Base class of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-order stream input.
class StreamError : public Error {
 public:
  using Error::Error;
};

/// A model or statistic could not be fitted from the supplied data.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Metric inputs violate their preconditions (length mismatch, zero variance).
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Artifact store read/write failure; the message names the offending file.
class StoreError : public Error {
 public:
  using Error::Error;
};

/// The five quality dimensions, in the fixed column order used everywhere.
enum class Dimension : std::size_t {
  kAccuracy = 0,
  kCompleteness = 1,
  kConsistency = 2,
  kTimeliness = 3,
  kSkewness = 4,
};

inline constexpr std::size_t kNumDimensions = 5;

inline constexpr std::array<const char*, kNumDimensions> kDimensionNames = {
    "accuracy", "completeness", "consistency", "timeliness", "skewness"};

inline const char* dimension_name(Dimension d) {
  return kDimensionNames[static_cast<std::size_t>(d)];
}

/// A dimension score could not be computed for a window.
class DimensionError : public Error {
 public:
  DimensionError(Dimension dim, const std::string& what)
      : Error(std::string(dimension_name(dim)) + ": " + what), dim_(dim) {}

  Dimension dimension() const { return dim_; }

 private:
  Dimension dim_;
};

}  // namespace adq

#endif  // ADQ_COMMON_HPP_
