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

#ifndef ADQ_MUTATION_HPP_
#define ADQ_MUTATION_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adq/common.hpp"
#include "adq/rng.hpp"
#include "adq/windowing.hpp"
#include "json.hpp"

namespace adq {

enum class FaultKind : std::size_t { kMissing, kOutlier, kOutOfRange, kShift, kScale };

inline constexpr std::size_t kNumFaultKinds = 5;
inline constexpr std::array<const char*, kNumFaultKinds> kFaultKindNames = {"missing", "outlier", "out_of_range",
                                                                            "shift", "scale"};

inline const char* fault_kind_name(FaultKind k) { return kFaultKindNames[static_cast<std::size_t>(k)]; }

inline FaultKind parse_fault_kind(std::string_view name) {
  for (std::size_t i = 0; i < kNumFaultKinds; ++i) {
    if (name == kFaultKindNames[i]) return static_cast<FaultKind>(i);
  }
  throw ConfigError("unknown fault kind '" + std::string(name) + "'");
}

/// Magnitudes for each fault kind.
struct MutationIntensity {
  double missing_fraction = 0.3;      // share of readings blanked
  double outlier_fraction = 0.05;     // share of present readings spiked
  double outlier_sigma = 8.0;         // spike size in window standard deviations
  double out_of_range_fraction = 0.1; // share of readings pushed outside the constraints
  double out_of_range_margin = 0.1;   // distance outside the range, as a fraction of its width
  double range_min = 0.0;             // constraint range the out_of_range fault escapes
  double range_max = 1.0;
  double shift_magnitude = 5.0;       // absolute offset added to every value
  double scale_magnitude = 0.2;       // values multiplied by (1 + m) or 1 / (1 + m)

  friend bool operator==(const MutationIntensity&, const MutationIntensity&) = default;
};

struct MutationPlan {
  std::array<double, kNumFaultKinds> fault_mix{1.0, 1.0, 1.0, 1.0, 1.0};
  double fault_fraction = 0.3;
  MutationIntensity intensity;
  std::uint64_t seed = 0;

  friend bool operator==(const MutationPlan&, const MutationPlan&) = default;
};

inline void validate(const MutationPlan& plan) {
  double total = 0.0;
  for (double w : plan.fault_mix) {
    if (w < 0.0 || !std::isfinite(w)) throw ConfigError("mutation: fault weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("mutation: fault weights must not all be zero");
  if (!(plan.fault_fraction >= 0.0 && plan.fault_fraction <= 1.0)) {
    throw ConfigError("mutation: fault_fraction must lie in [0, 1]");
  }
  const auto& in = plan.intensity;
  for (double f : {in.missing_fraction, in.outlier_fraction, in.out_of_range_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("mutation: fractions must lie in [0, 1]");
  }
  if (in.outlier_sigma < 0.0 || in.out_of_range_margin < 0.0 || in.scale_magnitude < 0.0) {
    throw ConfigError("mutation: magnitudes must be non-negative");
  }
}

/// One applied mutation, with the realized parameters.
struct FaultRecord {
  std::uint64_t window_id = 0;
  FaultKind kind = FaultKind::kMissing;
  std::size_t affected = 0;  // readings whose value changed
  double parameter = 0.0;    // offset, factor or spike size, depending on kind

  friend bool operator==(const FaultRecord&, const FaultRecord&) = default;
};

namespace detail {

// `count` distinct positions out of [0, n), in ascending order.
inline std::vector<std::size_t> pick_positions(std::size_t n, std::size_t count, CounterRng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  count = std::min(count, n);
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline std::size_t share(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

}  // namespace detail

/// Applies one fault of `kind` to a copy of `window`. Length and id are kept.
inline DataWindow mutate_window(const DataWindow& window, FaultKind kind, const MutationIntensity& in, CounterRng& rng,
                                FaultRecord* record = nullptr) {
  DataWindow out = window;
  auto& rs = out.readings;
  FaultRecord rec{window.window_id, kind, 0, 0.0};
  switch (kind) {
    case FaultKind::kMissing: {
      for (auto i : detail::pick_positions(rs.size(), detail::share(in.missing_fraction, rs.size()), rng)) {
        rs[i].value.reset();
      }
      rec.parameter = in.missing_fraction;
      break;
    }
    case FaultKind::kOutlier: {
      std::vector<std::size_t> present;
      double sum = 0.0;
      for (std::size_t i = 0; i < rs.size(); ++i) {
        if (rs[i].value) {
          present.push_back(i);
          sum += *rs[i].value;
        }
      }
      if (present.empty()) break;
      const double mean = sum / static_cast<double>(present.size());
      double ss = 0.0;
      for (auto i : present) ss += (*rs[i].value - mean) * (*rs[i].value - mean);
      double sigma = std::sqrt(ss / static_cast<double>(present.size()));
      if (sigma == 0.0) sigma = 1.0;
      const double spike = in.outlier_sigma * sigma;
      for (auto k : detail::pick_positions(present.size(), detail::share(in.outlier_fraction, present.size()), rng)) {
        *rs[present[k]].value += rng.coin() ? spike : -spike;
      }
      rec.parameter = spike;
      break;
    }
    case FaultKind::kOutOfRange: {
      const double width = std::max(in.range_max - in.range_min, 1.0);
      const double margin = in.out_of_range_margin * width;
      for (auto i : detail::pick_positions(rs.size(), detail::share(in.out_of_range_fraction, rs.size()), rng)) {
        const double u = rng.uniform();
        // Strictly outside the range even when margin is zero.
        const double above = std::nextafter(in.range_max, HUGE_VAL) + margin * (1.0 + u);
        const double below = std::nextafter(in.range_min, -HUGE_VAL) - margin * (1.0 + u);
        rs[i].value = rng.coin() ? above : below;
      }
      rec.parameter = margin;
      break;
    }
    case FaultKind::kShift: {
      const double offset = rng.coin() ? in.shift_magnitude : -in.shift_magnitude;
      for (auto& r : rs) {
        if (r.value) *r.value += offset;
      }
      rec.parameter = offset;
      break;
    }
    case FaultKind::kScale: {
      const double factor = rng.coin() ? 1.0 + in.scale_magnitude : 1.0 / (1.0 + in.scale_magnitude);
      for (auto& r : rs) {
        if (r.value) *r.value *= factor;
      }
      rec.parameter = factor;
      break;
    }
    default:
      throw ConfigError("mutate_window: unknown fault kind");
  }
  for (std::size_t i = 0; i < rs.size(); ++i) rec.affected += rs[i].value != window.readings[i].value ? 1 : 0;
  if (record) *record = rec;
  return out;
}

struct MutationResult {
  std::vector<DataWindow> windows;
  std::vector<FaultRecord> ledger;
};

/// Selects each window independently with probability `fault_fraction` and
/// applies one fault drawn from `fault_mix`. Randomness is keyed by
/// (seed, window_id), so the outcome for a window ignores the rest of the stream.
/// A fault that leaves the window unchanged is not recorded.
inline MutationResult apply_mutation_plan(std::span<const DataWindow> stream, const MutationPlan& plan) {
  validate(plan);
  const double total = std::accumulate(plan.fault_mix.begin(), plan.fault_mix.end(), 0.0);
  MutationResult result;
  result.windows.reserve(stream.size());
  for (const auto& w : stream) {
    CounterRng rng(plan.seed, w.window_id);
    if (!(rng.uniform() < plan.fault_fraction)) {
      result.windows.push_back(w);
      continue;
    }
    double pick = rng.uniform() * total;
    auto kind = FaultKind::kScale;
    for (std::size_t k = 0; k < kNumFaultKinds; ++k) {
      if (plan.fault_mix[k] <= 0.0) continue;
      kind = static_cast<FaultKind>(k);
      if (pick < plan.fault_mix[k]) break;
      pick -= plan.fault_mix[k];
    }
    FaultRecord rec;
    result.windows.push_back(mutate_window(w, kind, plan.intensity, rng, &rec));
    if (rec.affected > 0) result.ledger.push_back(rec);
  }
  return result;
}

inline void write_fault_ledger(std::ostream& out, std::span<const FaultRecord> ledger) {
  for (const auto& r : ledger) {
    out << nlohmann::json{{"window_id", r.window_id},
                          {"kind", fault_kind_name(r.kind)},
                          {"affected", r.affected},
                          {"parameter", r.parameter}}
               .dump()
        << '\n';
  }
}

}  // namespace adq

#endif  // ADQ_MUTATION_HPP_
