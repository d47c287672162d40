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

#ifndef ADQ_GENERATOR_HPP_
#define ADQ_GENERATOR_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "adq/common.hpp"
#include "adq/rng.hpp"
#include "adq/windowing.hpp"

namespace adq {

enum class DriftKind { kMeanShift, kDecayChange, kNoiseChange };

inline const char* drift_kind_name(DriftKind k) {
  switch (k) {
    case DriftKind::kMeanShift:
      return "mean_shift";
    case DriftKind::kDecayChange:
      return "decay_change";
    case DriftKind::kNoiseChange:
      return "noise_change";
  }
  return "?";
}

inline DriftKind parse_drift_kind(std::string_view s) {
  if (s == "mean_shift") return DriftKind::kMeanShift;
  if (s == "decay_change") return DriftKind::kDecayChange;
  if (s == "noise_change") return DriftKind::kNoiseChange;
  throw ConfigError("unknown drift kind '" + std::string(s) + "'");
}

/// Parameter change applied from `window_index` onward. Magnitudes add to the
/// level offset, decay rate or noise std respectively.
struct DriftEvent {
  std::size_t window_index = 0;
  DriftKind kind = DriftKind::kMeanShift;
  double magnitude = 0.0;

  friend bool operator==(const DriftEvent&, const DriftEvent&) = default;
};

/// Each window is one pumping event: pressure decays exponentially from p0
/// over the window, plus Gaussian noise.
struct PumpStreamConfig {
  std::size_t n_windows = 1000;
  std::size_t window_len = 200;
  double p0 = 100.0;
  double decay_rate = 0.5;
  double noise_std = 1.0;
  double missing_rate = 0.0;  // per-reading probability of a dropped sample
  std::vector<DriftEvent> drift_events;
  std::uint64_t seed = 1;
  std::int64_t tick_ms = 1;

  friend bool operator==(const PumpStreamConfig&, const PumpStreamConfig&) = default;
};

inline void validate(const PumpStreamConfig& c) {
  if (c.window_len == 0) throw ConfigError("stream: window_len must be positive");
  if (!(c.decay_rate > 0.0)) throw ConfigError("stream: decay_rate must be positive");
  if (c.noise_std < 0.0) throw ConfigError("stream: noise_std must be non-negative");
  if (!(c.missing_rate >= 0.0 && c.missing_rate <= 1.0)) throw ConfigError("stream: missing_rate must lie in [0, 1]");
  for (std::size_t i = 0; i < c.drift_events.size(); ++i) {
    if (c.drift_events[i].window_index >= c.n_windows) {
      throw ConfigError("stream: drift event index beyond the stream length");
    }
    if (i > 0 && c.drift_events[i].window_index <= c.drift_events[i - 1].window_index) {
      throw ConfigError("stream: drift event indices must be strictly increasing");
    }
  }
}

struct PumpParams {
  double offset = 0.0;
  double decay_rate = 0.0;
  double noise_std = 0.0;
};

/// Generator parameters in effect for window `w`.
inline PumpParams pump_params_at(const PumpStreamConfig& c, std::size_t w) {
  PumpParams p{0.0, c.decay_rate, c.noise_std};
  for (const auto& e : c.drift_events) {
    if (e.window_index > w) break;
    switch (e.kind) {
      case DriftKind::kMeanShift:
        p.offset += e.magnitude;
        break;
      case DriftKind::kDecayChange:
        p.decay_rate += e.magnitude;
        break;
      case DriftKind::kNoiseChange:
        p.noise_std = std::max(0.0, p.noise_std + e.magnitude);
        break;
    }
  }
  return p;
}

inline std::vector<Reading> generate_pump_stream(const PumpStreamConfig& c) {
  validate(c);
  std::vector<Reading> out;
  out.reserve(c.n_windows * c.window_len);
  const double len = static_cast<double>(c.window_len);
  for (std::size_t w = 0; w < c.n_windows; ++w) {
    const auto p = pump_params_at(c, w);
    CounterRng rng(c.seed, w);
    for (std::size_t i = 0; i < c.window_len; ++i) {
      Reading r;
      r.timestamp = static_cast<std::int64_t>(w * c.window_len + i) * c.tick_ms;
      const double t = static_cast<double>(i) / len;
      const double noise = p.noise_std > 0.0 ? p.noise_std * rng.normal() : 0.0;
      const bool drop = c.missing_rate > 0.0 && rng.uniform() < c.missing_rate;
      if (!drop) r.value = c.p0 * std::exp(-p.decay_rate * t) + p.offset + noise;
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace adq

#endif  // ADQ_GENERATOR_HPP_
