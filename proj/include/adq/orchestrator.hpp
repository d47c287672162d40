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

#ifndef ADQ_ORCHESTRATOR_HPP_
#define ADQ_ORCHESTRATOR_HPP_

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adq/aggregation.hpp"
#include "adq/common.hpp"
#include "adq/config.hpp"
#include "adq/dimensions.hpp"
#include "adq/drift.hpp"
#include "adq/mutation.hpp"
#include "adq/predictor.hpp"
#include "adq/windowing.hpp"

namespace adq {

enum class VersionTrigger { kInitial, kDriftAdaptation, kStaticOracleFail };

inline const char* trigger_name(VersionTrigger t) {
  switch (t) {
    case VersionTrigger::kInitial:
      return "initial";
    case VersionTrigger::kDriftAdaptation:
      return "drift_adaptation";
    case VersionTrigger::kStaticOracleFail:
      return "static_oracle_fail";
  }
  return "?";
}

inline VersionTrigger parse_trigger(std::string_view s) {
  if (s == "initial") return VersionTrigger::kInitial;
  if (s == "drift_adaptation") return VersionTrigger::kDriftAdaptation;
  if (s == "static_oracle_fail") return VersionTrigger::kStaticOracleFail;
  throw StoreError("unknown version trigger '" + std::string(s) + "'");
}

/// `created_at` is the stream position (window id) that produced the version,
/// so bundles stay reproducible byte for byte.
struct ModelVersion {
  std::uint64_t version = 1;
  VersionTrigger trigger = VersionTrigger::kInitial;
  std::uint64_t created_at = 0;
  std::optional<std::uint64_t> parent;

  friend bool operator==(const ModelVersion&, const ModelVersion&) = default;
};

/// A scored training window. Features and sorted values are caches derived
/// from `window`.
struct HistoryEntry {
  DataWindow window;
  std::vector<double> sorted_present;
  FeatureVector features{};
  QualityVector quality;
  double score = 0.0;

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

/// Change of one historical window's dimension scores after re-scoring.
struct RescoreDelta {
  std::uint64_t window_id = 0;
  DimVector delta{};
  friend bool operator==(const RescoreDelta&, const RescoreDelta&) = default;
};

struct ArtifactBundle {
  GbtModel model;
  StandardArtifacts standard;
  DriftDetectorState detector;
  std::vector<HistoryEntry> history;
  std::vector<ModelVersion> lineage;        // oldest first; back() is this bundle
  std::vector<RescoreDelta> rescore_deltas; // from the adaptation that made this version

  const ModelVersion& version() const { return lineage.back(); }
  friend bool operator==(const ArtifactBundle&, const ArtifactBundle&) = default;
};

inline QualityVector quality_of(const DataWindow& window, std::span<const double> sorted_present,
                                const StandardArtifacts& art) {
  if (sorted_present.empty()) return all_missing_sentinel();
  QualityVector q;
  q[Dimension::kAccuracy] = score_accuracy(window, art.anomaly);
  q[Dimension::kCompleteness] = score_completeness(window);
  q[Dimension::kConsistency] = score_consistency(window, art.constraints);
  auto [t, s] = score_dynamic(sorted_present, art.reference);
  q[Dimension::kTimeliness] = t;
  q[Dimension::kSkewness] = s;
  return q;
}

/// History entry with its quality vector; `score` is left for the caller.
inline HistoryEntry make_history_entry(DataWindow window, const StandardArtifacts& art) {
  HistoryEntry e;
  e.sorted_present = window_values(window).present;
  std::sort(e.sorted_present.begin(), e.sorted_present.end());
  e.features = extract_features(window, art.constraints);
  e.quality = quality_of(window, e.sorted_present, art);
  e.window = std::move(window);
  return e;
}

struct RescoreResult {
  std::vector<QualityVector> updated;
  std::vector<RescoreDelta> deltas;
};

/// Recomputes timeliness and skewness of every historical window against a
/// new reference. The constant dimensions are copied through untouched.
inline RescoreResult rescore_history(std::span<const HistoryEntry> history, const DynamicReference& new_reference) {
  RescoreResult out;
  out.updated.reserve(history.size());
  out.deltas.reserve(history.size());
  for (const auto& e : history) {
    QualityVector q = e.quality;
    if (!e.sorted_present.empty()) {
      auto [t, s] = score_dynamic(e.sorted_present, new_reference);
      q[Dimension::kTimeliness] = t;
      q[Dimension::kSkewness] = s;
    }
    RescoreDelta d{e.window.window_id, {}};
    for (std::size_t c = 0; c < kNumDimensions; ++c) d.delta[c] = q.values[c] - e.quality.values[c];
    out.updated.push_back(q);
    out.deltas.push_back(d);
  }
  return out;
}

namespace detail {

inline std::vector<double> pooled_values(std::span<const DataWindow> windows) {
  std::vector<double> out;
  for (const auto& w : windows) {
    for (const auto& r : w.readings) {
      if (r.value) out.push_back(*r.value);
    }
  }
  return out;
}

struct RefitResult {
  Aggregator aggregator;
  std::vector<double> scores;
  GbtModel model;
};

inline RefitResult refit(std::span<const QualityVector> qualities, std::span<const FeatureVector> features,
                         const GbtHyperparams& hp, std::uint64_t seed) {
  RefitResult r;
  r.aggregator = fit_aggregator(qualities);
  r.scores.reserve(qualities.size());
  for (const auto& q : qualities) r.scores.push_back(r.aggregator.score(q));
  r.model = fit_gbt(features, r.scores, hp, seed);
  return r;
}

}  // namespace detail

/// Refits standardizer, PCA and regressor from scratch on the bundle's
/// (already updated) history and returns the next version.
inline ArtifactBundle retrain(const ArtifactBundle& current, VersionTrigger trigger, std::uint64_t position,
                              std::uint64_t seed) {
  std::vector<QualityVector> qualities;
  std::vector<FeatureVector> features;
  for (const auto& e : current.history) {
    qualities.push_back(e.quality);
    features.push_back(e.features);
  }
  auto fit = detail::refit(qualities, features, current.model.hyperparams, seed);
  ArtifactBundle next = current;
  next.standard.aggregator = fit.aggregator;
  for (std::size_t i = 0; i < next.history.size(); ++i) next.history[i].score = fit.scores[i];
  next.model = std::move(fit.model);
  const auto parent = current.version().version;
  next.model.version = parent + 1;
  next.lineage.push_back(ModelVersion{parent + 1, trigger, position, parent});
  next.rescore_deltas.clear();
  return next;
}

class DevelopmentFailure : public FitError {
 public:
  using FitError::FitError;
};

struct DevelopDiagnostics {
  std::size_t iterations = 0;
  std::size_t n_trees = 0;
  std::vector<OracleReport> attempts;  // one per iteration
  std::size_t mutated_windows = 0;
};

struct DevelopResult {
  ArtifactBundle bundle;
  DevelopDiagnostics diagnostics;
  std::vector<FaultRecord> faults;
};

/*
 * Development phase. Reference artifacts come from the clean stream: the
 * anomaly detector from every clean value, the historical sample and the
 * skewness histogram from the last `reference_windows` clean windows (all of
 * them when 0), the drift histogram from the last `detector_windows`.
 * Ground truth, the divergence log and the regressor use the mutated stream.
 * The regressor is trained on all but every `holdout_every`-th window and must
 * pass the development oracle on those; the tree count doubles between
 * attempts.
 */
inline DevelopResult develop_phase(std::span<const DataWindow> training, const EngineConfig& config) {
  validate(config);
  if (training.empty()) throw DevelopmentFailure("develop: empty training stream");
  DevelopResult result;

  auto mutated = apply_mutation_plan(training, config.mutation);
  result.faults = std::move(mutated.ledger);
  result.diagnostics.mutated_windows = result.faults.size();

  const auto clean_values = detail::pooled_values(training);
  if (clean_values.empty()) throw DevelopmentFailure("develop: training stream has no present values");
  auto tail_values = [&](std::size_t count) {
    count = (count == 0) ? training.size() : std::min(count, training.size());
    auto v = detail::pooled_values(training.subspan(training.size() - count));
    if (v.empty()) throw DevelopmentFailure("develop: reference windows have no present values");
    return v;
  };
  const auto ref_values = tail_values(config.reference_windows);
  const auto drift_values = tail_values(config.detector_windows);

  ArtifactBundle bundle;
  auto& art = bundle.standard;
  art.anomaly = fit_anomaly_detector(clean_values, config.detector_cutoff);
  art.constraints = config.constraints;
  art.reference = make_dynamic_reference(ref_values, config.bins, config.skew_smoothing, config.pad_fraction);
  bundle.detector =
      make_detector(drift_values, config.bins, config.tau, config.min_history, config.drift_smoothing, config.pad_fraction);
  bundle.detector.rule = config.drift_rule;
  bundle.detector.zeta = config.zeta;

  bundle.history.reserve(mutated.windows.size());
  for (auto& w : mutated.windows) {
    auto entry = make_history_entry(std::move(w), art);
    if (!entry.sorted_present.empty()) {
      bundle.detector.divergence_history.push_back(divergence_of(bundle.detector, entry.sorted_present));
    }
    bundle.history.push_back(std::move(entry));
  }
  if (bundle.history.size() < 2 * config.dev_oracle.holdout_every) {
    throw DevelopmentFailure("develop: need at least " + std::to_string(2 * config.dev_oracle.holdout_every) +
                             " training windows");
  }

  std::vector<QualityVector> qualities;
  for (const auto& e : bundle.history) qualities.push_back(e.quality);
  art.aggregator = fit_aggregator(qualities);
  for (auto& e : bundle.history) e.score = art.aggregator.score(e.quality);

  std::vector<FeatureVector> fit_x;
  std::vector<double> fit_y;
  std::vector<FeatureVector> hold_x;
  std::vector<double> hold_y;
  const auto k = config.dev_oracle.holdout_every;
  for (std::size_t i = 0; i < bundle.history.size(); ++i) {
    const auto& e = bundle.history[i];
    if (i % k == k - 1) {
      hold_x.push_back(e.features);
      hold_y.push_back(e.score);
    } else {
      fit_x.push_back(e.features);
      fit_y.push_back(e.score);
    }
  }

  GbtHyperparams hp = config.gbt;
  for (std::size_t iter = 0; iter < config.dev_oracle.max_iterations; ++iter) {
    auto model = fit_gbt(fit_x, fit_y, hp, config.seed);
    std::vector<double> pred;
    pred.reserve(hold_x.size());
    for (const auto& x : hold_x) pred.push_back(predict(model, x));
    auto report = oracle_check(hold_y, pred, config.dev_oracle.tolerance);
    result.diagnostics.attempts.push_back(report);
    result.diagnostics.iterations = iter + 1;
    result.diagnostics.n_trees = hp.n_trees;
    if (report.pass) {
      model.version = 1;
      bundle.model = std::move(model);
      bundle.lineage.push_back(ModelVersion{1, VersionTrigger::kInitial, 0, std::nullopt});
      result.bundle = std::move(bundle);
      return result;
    }
    hp.n_trees *= 2;
  }
  std::string msg = "develop: regressor never met the development oracle;";
  for (std::size_t i = 0; i < result.diagnostics.attempts.size(); ++i) {
    const auto& a = result.diagnostics.attempts[i];
    msg += " attempt " + std::to_string(i + 1) + ": ";
    if (a.r2) msg += "r2=" + std::to_string(*a.r2);
    if (a.mae) msg += "mae=" + std::to_string(*a.mae);
    if (!a.reason.empty()) msg += a.reason;
    msg += ";";
  }
  throw DevelopmentFailure(msg);
}

enum class Mode { kAdaptive, kStatic, kStandard };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::kAdaptive:
      return "adaptive";
    case Mode::kStatic:
      return "static";
    case Mode::kStandard:
      return "standard";
  }
  return "?";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "adaptive") return Mode::kAdaptive;
  if (s == "static") return Mode::kStatic;
  if (s == "standard") return Mode::kStandard;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

enum class Route {
  kMlScore,           // regressor prediction
  kAdaptThenScore,    // drift: start adaptation, standard-score the window
  kCollect,           // adaptation in progress: gather post-drift windows
  kStandardEvaluate,  // static checkpoint: standard score + oracle check
  kStandardScore,     // standard mode
};

enum class Provenance { kMl, kStandard };

inline const char* provenance_name(Provenance p) { return p == Provenance::kMl ? "ml" : "standard"; }

struct ScoredWindow {
  std::uint64_t window_id = 0;
  std::optional<QualityVector> quality;
  double unified_score = 0.0;
  Provenance provenance = Provenance::kMl;
  std::uint64_t model_version = 1;
  bool drifted = false;
  std::optional<double> p_value;
  std::optional<double> divergence;
  bool fault = false;  // window without present values
  Route route = Route::kMlScore;
};

inline nlohmann::json to_output_json(const ScoredWindow& s) {
  nlohmann::json j = {{"window_id", s.window_id},
                      {"score", s.unified_score},
                      {"provenance", provenance_name(s.provenance)},
                      {"model_version", s.model_version},
                      {"drifted", s.drifted},
                      {"p_value", nullptr}};
  if (s.p_value) j["p_value"] = *s.p_value;
  return j;
}

/// Summary of one completed (or failed) adaptation.
struct AdaptationEvent {
  std::uint64_t position = 0;  // window id that completed it
  VersionTrigger trigger = VersionTrigger::kDriftAdaptation;
  bool succeeded = false;
  std::uint64_t new_version = 0;
  DimVector max_abs_delta{};
  std::string error;
};

struct PipelineState {
  Mode mode = Mode::kAdaptive;
  ArtifactBundle bundle;
  EngineConfig config;

  std::size_t chunk_counter = 0;
  std::vector<DataWindow> pending;   // adaptive: windows gathered since the last detection
  std::deque<DataWindow> recent;     // static: newest windows, for re-baselining
  std::vector<double> eval_truth;    // static: pairs since the last checkpoint
  std::vector<double> eval_pred;

  std::size_t detections = 0;
  std::size_t evaluations = 0;
  std::size_t retrains = 0;
  std::vector<std::uint64_t> detection_ids;
  std::vector<AdaptationEvent> adaptations;

  // Invoked with every bundle produced by a successful retrain.
  std::function<void(const ArtifactBundle&)> on_new_version;
};

inline PipelineState make_pipeline(Mode mode, ArtifactBundle bundle, const EngineConfig& config) {
  PipelineState st;
  st.mode = mode;
  st.bundle = std::move(bundle);
  st.config = config;
  st.bundle.detector.tau = config.tau;
  st.bundle.detector.min_history = config.min_history;
  st.bundle.detector.rule = config.drift_rule;
  st.bundle.detector.zeta = config.zeta;
  return st;
}

/// The method activator.
inline Route activate(const PipelineState& st, const std::optional<DriftVerdict>& verdict) {
  switch (st.mode) {
    case Mode::kAdaptive:
      if (!st.pending.empty()) return Route::kCollect;
      if (!verdict) throw Error("activate: adaptive mode requires a drift verdict");
      return verdict->drifted ? Route::kAdaptThenScore : Route::kMlScore;
    case Mode::kStatic:
      return st.chunk_counter + 1 < st.config.beta ? Route::kMlScore : Route::kStandardEvaluate;
    case Mode::kStandard:
      return Route::kStandardScore;
  }
  throw Error("activate: unknown mode");
}

namespace detail {

inline ScoredWindow ml_score(const PipelineState& st, const DataWindow& window) {
  ScoredWindow out;
  out.window_id = window.window_id;
  out.unified_score = predict(st.bundle.model, extract_features(window, st.bundle.standard.constraints));
  out.provenance = Provenance::kMl;
  out.model_version = st.bundle.version().version;
  out.route = Route::kMlScore;
  return out;
}

inline ScoredWindow standard_score(const PipelineState& st, const DataWindow& window, Route route) {
  const auto s = score_window_standard(window, st.bundle.standard);
  ScoredWindow out;
  out.window_id = window.window_id;
  out.quality = s.quality;
  out.unified_score = s.unified;
  out.provenance = Provenance::kStandard;
  out.model_version = st.bundle.version().version;
  out.fault = s.sentinel;
  out.route = route;
  return out;
}

/*
 * Re-baselines the dynamic references on `reference_windows`, re-scores the
 * history against them, appends `new_windows` scored under the new reference
 * and retrains from scratch. Nothing is committed unless every fit succeeds;
 * on failure the previous bundle stays in service.
 */
inline bool adapt(PipelineState& st, std::span<const DataWindow> reference_windows,
                  std::span<const DataWindow> new_windows, VersionTrigger trigger, std::uint64_t position) {
  AdaptationEvent event;
  event.position = position;
  event.trigger = trigger;
  auto& bundle = st.bundle;
  const auto& cfg = st.config;
  try {
    auto ref_values = pooled_values(reference_windows);
    if (ref_values.empty()) throw FitError("adaptation windows have no present values");
    StandardArtifacts next_art = bundle.standard;
    next_art.reference = make_dynamic_reference(ref_values, cfg.bins, cfg.skew_smoothing, cfg.pad_fraction);

    auto rescored = rescore_history(bundle.history, next_art.reference);
    std::vector<HistoryEntry> added;
    for (const auto& w : new_windows) added.push_back(make_history_entry(w, next_art));

    // Rows dropped by the history cap come off the front.
    const std::size_t total = bundle.history.size() + added.size();
    const std::size_t drop = (cfg.history_cap > 0 && total > cfg.history_cap) ? total - cfg.history_cap : 0;
    std::vector<QualityVector> qualities;
    std::vector<FeatureVector> features;
    qualities.reserve(total - drop);
    features.reserve(total - drop);
    for (std::size_t i = drop; i < total; ++i) {
      const bool old = i < bundle.history.size();
      qualities.push_back(old ? rescored.updated[i] : added[i - bundle.history.size()].quality);
      features.push_back(old ? bundle.history[i].features : added[i - bundle.history.size()].features);
    }
    auto fit = refit(qualities, features, bundle.model.hyperparams, cfg.seed);

    for (std::size_t i = 0; i < bundle.history.size(); ++i) bundle.history[i].quality = rescored.updated[i];
    for (auto& e : added) bundle.history.push_back(std::move(e));
    if (drop > 0) bundle.history.erase(bundle.history.begin(), bundle.history.begin() + static_cast<std::ptrdiff_t>(drop));
    for (std::size_t i = 0; i < bundle.history.size(); ++i) bundle.history[i].score = fit.scores[i];

    next_art.aggregator = fit.aggregator;
    bundle.standard = std::move(next_art);
    rebaseline(bundle.detector, ref_values);
    const auto parent = bundle.version().version;
    bundle.model = std::move(fit.model);
    bundle.model.version = parent + 1;
    bundle.lineage.push_back(ModelVersion{parent + 1, trigger, position, parent});
    bundle.rescore_deltas = std::move(rescored.deltas);
    for (const auto& d : bundle.rescore_deltas) {
      for (std::size_t c = 0; c < kNumDimensions; ++c) {
        event.max_abs_delta[c] = std::max(event.max_abs_delta[c], std::abs(d.delta[c]));
      }
    }
    event.succeeded = true;
    event.new_version = parent + 1;
    ++st.retrains;
  } catch (const Error& e) {
    event.error = e.what();
  }
  st.adaptations.push_back(event);
  if (event.succeeded && st.on_new_version) st.on_new_version(bundle);
  return event.succeeded;
}

}  // namespace detail

/*
 * Adaptive pipeline. A detection opens an adaptation that gathers the
 * triggering window and the following windows until `adapt_windows` are
 * held; those become the new reference sample, the history is re-scored and
 * the regressor retrained. Gathered windows are standard-scored, the last one
 * under the new artifacts. The detector is not consulted while gathering.
 */
inline ScoredWindow process_window_adaptive(PipelineState& st, const DataWindow& window) {
  std::optional<DriftVerdict> verdict;
  if (st.pending.empty()) {
    verdict = st.config.detection_enabled ? observe(st.bundle.detector, window) : DriftVerdict{};
  }
  const auto route = activate(st, verdict);
  if (route == Route::kMlScore) {
    auto out = detail::ml_score(st, window);
    out.p_value = verdict->p_value;
    out.divergence = verdict->divergence;
    out.fault = verdict->fault;
    return out;
  }
  if (route == Route::kAdaptThenScore) {
    ++st.detections;
    st.detection_ids.push_back(window.window_id);
  }
  st.pending.push_back(window);
  if (st.pending.size() >= st.config.adapt_windows) {
    auto gathered = std::move(st.pending);
    st.pending.clear();
    detail::adapt(st, gathered, gathered, VersionTrigger::kDriftAdaptation, window.window_id);
  }
  auto out = detail::standard_score(st, window, route);
  if (verdict) {
    out.drifted = verdict->drifted;
    out.p_value = verdict->p_value;
    out.divergence = verdict->divergence;
  }
  return out;
}

/*
 * Static pipeline: regressor scores until the chunk counter reaches beta; that
 * window is standard-scored and checked by the oracle. A failed check
 * re-baselines on the newest `adapt_windows` windows and retrains.
 */
inline ScoredWindow process_window_static(PipelineState& st, const DataWindow& window) {
  st.recent.push_back(window);
  while (st.recent.size() > st.config.adapt_windows) st.recent.pop_front();
  const auto route = activate(st, std::nullopt);
  if (route == Route::kMlScore) {
    ++st.chunk_counter;
    return detail::ml_score(st, window);
  }
  st.chunk_counter = 0;
  ++st.evaluations;
  auto out = detail::standard_score(st, window, route);
  const double pred = predict(st.bundle.model, extract_features(window, st.bundle.standard.constraints));
  st.eval_truth.push_back(out.unified_score);
  st.eval_pred.push_back(pred);
  const auto report = oracle_check(st.eval_truth, st.eval_pred, st.config.tolerance);
  st.eval_truth.clear();
  st.eval_pred.clear();
  if (!report.pass) {
    std::vector<DataWindow> ref(st.recent.begin(), st.recent.end());
    const DataWindow added[] = {window};
    if (detail::adapt(st, ref, added, VersionTrigger::kStaticOracleFail, window.window_id)) {
      out = detail::standard_score(st, window, route);
    }
  }
  return out;
}

inline ScoredWindow process_window_standard(const PipelineState& st, const DataWindow& window) {
  return detail::standard_score(st, window, Route::kStandardScore);
}

inline ScoredWindow process_window(PipelineState& st, const DataWindow& window) {
  switch (st.mode) {
    case Mode::kAdaptive:
      return process_window_adaptive(st, window);
    case Mode::kStatic:
      return process_window_static(st, window);
    case Mode::kStandard:
      return process_window_standard(st, window);
  }
  throw Error("process_window: unknown mode");
}

}  // namespace adq

#endif  // ADQ_ORCHESTRATOR_HPP_
