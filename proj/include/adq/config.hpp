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

#ifndef ADQ_CONFIG_HPP_
#define ADQ_CONFIG_HPP_

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include "adq/common.hpp"
#include "adq/dimensions.hpp"
#include "adq/drift.hpp"
#include "adq/generator.hpp"
#include "adq/mutation.hpp"
#include "adq/predictor.hpp"

namespace adq {

/// Development-phase acceptance test for the regressor.
struct DevOracle {
  OracleTolerance tolerance{OracleMetric::kR2, 0.9};
  std::size_t holdout_every = 5;   // every k-th training window is held out
  std::size_t max_iterations = 4;  // tree count doubles between attempts

  friend bool operator==(const DevOracle&, const DevOracle&) = default;
};

struct EngineConfig {
  std::size_t window_len = 200;
  std::size_t bins = 32;
  double pad_fraction = 0.05;
  double drift_smoothing = 0.0;
  double skew_smoothing = 1e-6;

  double tau = 0.05;
  std::size_t min_history = 30;
  DriftRule drift_rule = DriftRule::kPValue;
  double zeta = 0.1;
  bool detection_enabled = true;

  std::size_t beta = 50;
  OracleTolerance tolerance{OracleMetric::kMae, 0.5};

  double detector_cutoff = 3.5;
  IntegrityConstraints constraints{0.0, 150.0};
  std::size_t reference_windows = 0;  // historical sample; 0 takes the whole clean stream
  std::size_t detector_windows = 10;  // drift reference histogram
  std::size_t adapt_windows = 10;
  std::size_t history_cap = 0;  // 0 keeps every window

  GbtHyperparams gbt;
  DevOracle dev_oracle;
  MutationPlan mutation;
  PumpStreamConfig stream;
  std::size_t train_windows = 300;

  std::uint64_t seed = 42;

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

inline void validate(const EngineConfig& c) {
  if (c.window_len == 0) throw ConfigError("window_len must be positive");
  if (c.bins < 2) throw ConfigError("bins must be at least 2");
  if (c.pad_fraction < 0.0) throw ConfigError("pad_fraction must be non-negative");
  if (c.drift_smoothing < 0.0 || c.skew_smoothing < 0.0) throw ConfigError("smoothing must be non-negative");
  if (!(c.tau > 0.0 && c.tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (c.beta == 0) throw ConfigError("beta must be positive");
  if (!(c.detector_cutoff > 0.0)) throw ConfigError("detector_cutoff must be positive");
  validate(c.constraints);
  if (c.detector_windows == 0) throw ConfigError("detector_windows must be positive");
  if (c.adapt_windows == 0) throw ConfigError("adapt_windows must be positive");
  if (c.gbt.max_depth == 0 || c.gbt.min_samples_leaf == 0) throw ConfigError("gbt: max_depth and min_samples_leaf must be positive");
  if (!(c.gbt.learning_rate > 0.0 && c.gbt.learning_rate <= 1.0)) throw ConfigError("gbt: learning_rate must lie in (0, 1]");
  if (c.dev_oracle.holdout_every < 2) throw ConfigError("dev_oracle: holdout_every must be at least 2");
  if (c.dev_oracle.max_iterations == 0) throw ConfigError("dev_oracle: max_iterations must be positive");
  validate(c.mutation);
  validate(c.stream);
}

namespace detail {

inline void reject_unknown(const YAML::Node& node, std::string_view where, std::initializer_list<std::string_view> known) {
  if (!node) return;
  if (!node.IsMap()) throw ConfigError(std::string(where) + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (!node || !node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline OracleMetric parse_metric(const std::string& s) {
  if (s == "mae") return OracleMetric::kMae;
  if (s == "r2") return OracleMetric::kR2;
  throw ConfigError("unknown oracle metric '" + s + "' (expected mae or r2)");
}

inline void read_tolerance(const YAML::Node& node, OracleTolerance& tol) {
  if (!node) return;
  reject_unknown(node, "tolerance", {"metric", "threshold", "holdout_every", "max_iterations"});
  std::string metric = tol.metric == OracleMetric::kMae ? "mae" : "r2";
  read(node, "metric", metric);
  tol.metric = parse_metric(metric);
  read(node, "threshold", tol.threshold);
}

}  // namespace detail

/// Fills fields derived from other keys, then validates. Sub-seeds follow the
/// global seed unless set explicitly.
inline void finalize(EngineConfig& c, bool mutation_seed_set, bool stream_seed_set) {
  c.stream.window_len = c.window_len;
  c.mutation.intensity.range_min = c.constraints.min_value;
  c.mutation.intensity.range_max = c.constraints.max_value;
  if (!mutation_seed_set) c.mutation.seed = c.seed;
  if (!stream_seed_set) c.stream.seed = c.seed;
  validate(c);
}

/// Parses the YAML engine configuration. Missing keys keep their defaults;
/// unknown keys are rejected.
inline EngineConfig parse_config(const YAML::Node& root) {
  using detail::read;
  EngineConfig c;
  bool mutation_seed_set = false;
  bool stream_seed_set = false;
  if (!root || root.IsNull()) {
    finalize(c, false, false);
    return c;
  }
  detail::reject_unknown(root, "config",
                         {"window_len", "bins", "pad_fraction", "drift_smoothing", "skew_smoothing", "tau",
                          "min_history", "drift_rule", "zeta", "detection_enabled", "beta", "tolerance",
                          "detector_cutoff", "constraints", "reference_windows", "detector_windows", "adapt_windows", "history_cap",
                          "gbt", "dev_oracle", "mutation", "stream", "train_windows", "seed"});
  read(root, "window_len", c.window_len);
  read(root, "bins", c.bins);
  read(root, "pad_fraction", c.pad_fraction);
  read(root, "drift_smoothing", c.drift_smoothing);
  read(root, "skew_smoothing", c.skew_smoothing);
  read(root, "tau", c.tau);
  read(root, "min_history", c.min_history);
  if (root["drift_rule"]) {
    const auto rule = root["drift_rule"].as<std::string>();
    if (rule == "pvalue") {
      c.drift_rule = DriftRule::kPValue;
    } else if (rule == "threshold") {
      c.drift_rule = DriftRule::kThreshold;
    } else {
      throw ConfigError("drift_rule must be 'pvalue' or 'threshold'");
    }
  }
  read(root, "zeta", c.zeta);
  read(root, "detection_enabled", c.detection_enabled);
  read(root, "beta", c.beta);
  detail::read_tolerance(root["tolerance"], c.tolerance);
  read(root, "detector_cutoff", c.detector_cutoff);
  if (const auto n = root["constraints"]) {
    detail::reject_unknown(n, "constraints", {"min", "max"});
    read(n, "min", c.constraints.min_value);
    read(n, "max", c.constraints.max_value);
  }
  read(root, "reference_windows", c.reference_windows);
  read(root, "detector_windows", c.detector_windows);
  read(root, "adapt_windows", c.adapt_windows);
  read(root, "history_cap", c.history_cap);
  if (const auto n = root["gbt"]) {
    detail::reject_unknown(n, "gbt", {"n_trees", "max_depth", "learning_rate", "min_samples_leaf"});
    read(n, "n_trees", c.gbt.n_trees);
    read(n, "max_depth", c.gbt.max_depth);
    read(n, "learning_rate", c.gbt.learning_rate);
    read(n, "min_samples_leaf", c.gbt.min_samples_leaf);
  }
  if (const auto n = root["dev_oracle"]) {
    detail::read_tolerance(n, c.dev_oracle.tolerance);
    read(n, "holdout_every", c.dev_oracle.holdout_every);
    read(n, "max_iterations", c.dev_oracle.max_iterations);
  }
  if (const auto n = root["mutation"]) {
    detail::reject_unknown(n, "mutation",
                           {"fault_fraction", "weights", "missing_fraction", "outlier_fraction", "outlier_sigma",
                            "out_of_range_fraction", "out_of_range_margin", "shift_magnitude", "scale_magnitude",
                            "seed"});
    auto& m = c.mutation;
    read(n, "fault_fraction", m.fault_fraction);
    if (const auto w = n["weights"]) {
      if (!w.IsMap()) throw ConfigError("mutation.weights: expected a mapping");
      m.fault_mix.fill(0.0);
      for (const auto& kv : w) {
        m.fault_mix[static_cast<std::size_t>(parse_fault_kind(kv.first.as<std::string>()))] = kv.second.as<double>();
      }
    }
    read(n, "missing_fraction", m.intensity.missing_fraction);
    read(n, "outlier_fraction", m.intensity.outlier_fraction);
    read(n, "outlier_sigma", m.intensity.outlier_sigma);
    read(n, "out_of_range_fraction", m.intensity.out_of_range_fraction);
    read(n, "out_of_range_margin", m.intensity.out_of_range_margin);
    read(n, "shift_magnitude", m.intensity.shift_magnitude);
    read(n, "scale_magnitude", m.intensity.scale_magnitude);
    mutation_seed_set = static_cast<bool>(n["seed"]);
    read(n, "seed", m.seed);
  }
  if (const auto n = root["stream"]) {
    detail::reject_unknown(n, "stream",
                           {"n_windows", "p0", "decay_rate", "noise_std", "missing_rate", "drift_events", "seed"});
    auto& s = c.stream;
    read(n, "n_windows", s.n_windows);
    read(n, "p0", s.p0);
    read(n, "decay_rate", s.decay_rate);
    read(n, "noise_std", s.noise_std);
    read(n, "missing_rate", s.missing_rate);
    stream_seed_set = static_cast<bool>(n["seed"]);
    read(n, "seed", s.seed);
    if (const auto events = n["drift_events"]) {
      if (!events.IsSequence()) throw ConfigError("stream.drift_events: expected a list");
      for (const auto& e : events) {
        detail::reject_unknown(e, "stream.drift_events[]", {"window", "kind", "magnitude"});
        DriftEvent ev;
        read(e, "window", ev.window_index);
        if (e["kind"]) ev.kind = parse_drift_kind(e["kind"].as<std::string>());
        read(e, "magnitude", ev.magnitude);
        s.drift_events.push_back(ev);
      }
    }
  }
  read(root, "train_windows", c.train_windows);
  read(root, "seed", c.seed);
  finalize(c, mutation_seed_set, stream_seed_set);
  return c;
}

inline EngineConfig parse_config_string(const std::string& text) {
  try {
    return parse_config(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline EngineConfig load_config(const std::string& path) {
  try {
    return parse_config(YAML::LoadFile(path));
  } catch (const YAML::BadFile&) {
    throw ConfigError("config: cannot read '" + path + "'");
  } catch (const YAML::Exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

/// Default configuration with derived fields filled in.
inline EngineConfig default_config() { return parse_config(YAML::Node()); }

}  // namespace adq

#endif  // ADQ_CONFIG_HPP_
