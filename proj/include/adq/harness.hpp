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

#ifndef ADQ_HARNESS_HPP_
#define ADQ_HARNESS_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "adq/config.hpp"
#include "adq/generator.hpp"
#include "adq/orchestrator.hpp"
#include "json.hpp"

namespace adq {

struct ExperimentParams {
  Mode mode = Mode::kAdaptive;
  double tau = 0.05;
  std::size_t beta = 50;
  bool detection_enabled = true;  // false freezes the adaptive model

  friend bool operator==(const ExperimentParams&, const ExperimentParams&) = default;
};

struct ExperimentRecord {
  std::uint64_t window_id = 0;
  double truth = 0.0;
  double prediction = 0.0;
  Provenance provenance = Provenance::kMl;
  double abs_error = 0.0;
  double cum_mae = 0.0;
  std::optional<double> cum_r2;  // undefined for fewer than 2 records or constant truth
  std::int64_t elapsed_ns = 0;
  bool drifted = false;
  std::optional<double> p_value;
  std::uint64_t model_version = 1;

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

struct ExperimentSummary {
  std::size_t n = 0;
  double final_mae = 0.0;
  std::optional<double> final_r2;
  std::int64_t total_ns = 0;
  std::size_t retrains = 0;
  std::size_t evaluations = 0;
  std::vector<std::uint64_t> detections;
  std::int64_t median_ml_ns = 0;
  std::int64_t median_standard_ns = 0;

  friend bool operator==(const ExperimentSummary&, const ExperimentSummary&) = default;
};

struct ExperimentReport {
  ExperimentParams params;
  std::vector<ExperimentRecord> records;
  ExperimentSummary summary;

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

/// Everything shared by the modes compared on one stream: the generated
/// windows, the development bundle and the out-of-band ground truth.
struct ExperimentContext {
  EngineConfig config;
  std::vector<DataWindow> windows;  // whole stream; the first train_windows are development data
  DevelopResult development;
  std::vector<double> truth;        // per replay window
};

namespace detail {

/*
 * Ground truth under the prevailing conditions. The generator's drift schedule
 * splits the replay into regimes; regime r takes its reference from its first
 * `adapt_windows` windows and refits the aggregator on the development history
 * plus every earlier regime's reference windows, all scored against that
 * reference. Regime 0 is the development bundle itself.
 */
inline std::vector<double> regime_truth(const ExperimentContext& ctx) {
  const auto& cfg = ctx.config;
  const auto& dev = ctx.development.bundle;
  const std::size_t train = cfg.train_windows;
  std::vector<std::size_t> starts;
  for (const auto& e : cfg.stream.drift_events) {
    if (e.window_index >= train) starts.push_back(e.window_index);
  }

  std::vector<double> truth;
  truth.reserve(ctx.windows.size() - train);
  StandardArtifacts art = dev.standard;
  std::vector<DataWindow> appended;
  std::size_t next = 0;
  for (std::size_t i = train; i < ctx.windows.size(); ++i) {
    if (next < starts.size() && i == starts[next]) {
      const std::size_t end = std::min(ctx.windows.size(), i + cfg.adapt_windows);
      std::span<const DataWindow> ref_windows(ctx.windows.data() + i, end - i);
      const auto values = pooled_values(ref_windows);
      if (!values.empty()) {
        art.reference = make_dynamic_reference(values, cfg.bins, cfg.skew_smoothing, cfg.pad_fraction);
        appended.insert(appended.end(), ref_windows.begin(), ref_windows.end());
        auto rescored = rescore_history(dev.history, art.reference);
        auto qualities = std::move(rescored.updated);
        for (const auto& w : appended) {
          auto sorted = window_values(w).present;
          std::sort(sorted.begin(), sorted.end());
          qualities.push_back(quality_of(w, sorted, art));
        }
        art.aggregator = fit_aggregator(qualities);
      }
      ++next;
    }
    truth.push_back(score_window_standard(ctx.windows[i], art).unified);
  }
  return truth;
}

inline std::int64_t median_of_ints(std::vector<std::int64_t> v) {
  if (v.empty()) return 0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace detail

inline ExperimentContext prepare_experiment(const EngineConfig& config) {
  validate(config);
  if (config.train_windows == 0 || config.train_windows >= config.stream.n_windows) {
    throw ConfigError("train_windows must be positive and below stream.n_windows");
  }
  ExperimentContext ctx;
  ctx.config = config;
  ctx.windows = segment_stream(generate_pump_stream(config.stream), config.window_len);
  std::span<const DataWindow> train(ctx.windows.data(), config.train_windows);
  ctx.development = develop_phase(train, config);
  ctx.truth = detail::regime_truth(ctx);
  return ctx;
}

/*
 * Replays the post-development windows through one pipeline. Only the
 * pipeline call is timed; the ground truth was computed beforehand.
 */
inline ExperimentReport run_experiment(const ExperimentContext& ctx, const ExperimentParams& params) {
  EngineConfig cfg = ctx.config;
  cfg.tau = params.tau;
  cfg.beta = params.beta;
  cfg.detection_enabled = params.detection_enabled;
  auto st = make_pipeline(params.mode, ctx.development.bundle, cfg);

  ExperimentReport report;
  report.params = params;
  const std::size_t train = cfg.train_windows;
  report.records.reserve(ctx.windows.size() - train);
  double abs_sum = 0.0;
  double y_sum = 0.0;
  double y_sq = 0.0;
  double res_sq = 0.0;
  std::vector<std::int64_t> ml_ns;
  std::vector<std::int64_t> std_ns;
  for (std::size_t i = train; i < ctx.windows.size(); ++i) {
    const auto& window = ctx.windows[i];
    const auto t0 = std::chrono::steady_clock::now();
    const auto scored = process_window(st, window);
    const auto t1 = std::chrono::steady_clock::now();

    ExperimentRecord rec;
    rec.window_id = window.window_id;
    rec.truth = ctx.truth[i - train];
    rec.prediction = scored.unified_score;
    rec.provenance = scored.provenance;
    rec.abs_error = std::abs(rec.truth - rec.prediction);
    rec.elapsed_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
    rec.drifted = scored.drifted;
    rec.p_value = scored.p_value;
    rec.model_version = scored.model_version;

    abs_sum += rec.abs_error;
    y_sum += rec.truth;
    y_sq += rec.truth * rec.truth;
    const double res = rec.truth - rec.prediction;
    res_sq += res * res;
    const double n = static_cast<double>(report.records.size() + 1);
    rec.cum_mae = abs_sum / n;
    const double ss_tot = y_sq - y_sum * y_sum / n;
    if (n >= 2 && ss_tot > 1e-12 * std::max(1.0, y_sq)) rec.cum_r2 = 1.0 - res_sq / ss_tot;

    (scored.route == Route::kMlScore ? ml_ns : std_ns).push_back(rec.elapsed_ns);
    report.summary.total_ns += rec.elapsed_ns;
    report.records.push_back(rec);
  }
  auto& s = report.summary;
  s.n = report.records.size();
  if (!report.records.empty()) {
    s.final_mae = report.records.back().cum_mae;
    s.final_r2 = report.records.back().cum_r2;
  }
  s.retrains = st.retrains;
  s.evaluations = st.evaluations;
  s.detections = st.detection_ids;
  s.median_ml_ns = detail::median_of_ints(std::move(ml_ns));
  s.median_standard_ns = detail::median_of_ints(std::move(std_ns));
  return report;
}

inline ExperimentReport run_experiment(const ExperimentParams& params, const EngineConfig& config) {
  return run_experiment(prepare_experiment(config), params);
}

struct SweepResult {
  std::map<double, std::size_t> detections;  // tau -> count
  std::vector<double> p_values;              // warmed-up replay windows, in order
};

/// Replays the detector once, without adaptation, and counts p < tau for
/// every tau over the shared p-value sequence.
inline SweepResult sensitivity_sweep(std::span<const double> taus, const ExperimentContext& ctx) {
  for (double t : taus) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("sweep: every tau must lie in (0, 1)");
  }
  SweepResult out;
  auto detector = ctx.development.bundle.detector;
  detector.min_history = ctx.config.min_history;
  for (std::size_t i = ctx.config.train_windows; i < ctx.windows.size(); ++i) {
    const auto v = observe(detector, ctx.windows[i]);
    if (v.p_value) out.p_values.push_back(*v.p_value);
  }
  for (double t : taus) {
    out.detections[t] = static_cast<std::size_t>(
        std::count_if(out.p_values.begin(), out.p_values.end(), [t](double p) { return p < t; }));
  }
  return out;
}

enum class ReportFormat { kCsv, kJsonl, kSummaryJson };

inline constexpr const char* kReportCsvHeader =
    "window_id,truth,prediction,provenance,abs_error,cum_mae,cum_r2,elapsed_ns,drifted,p_value,model_version";

namespace detail {

inline std::string fmt_double(double x) { return nlohmann::json(x).dump(); }

inline std::string fmt_optional(const std::optional<double>& x) { return x ? fmt_double(*x) : std::string(); }

inline nlohmann::json optional_json(const std::optional<double>& x) {
  return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

inline nlohmann::json record_json(const ExperimentRecord& r) {
  return {{"window_id", r.window_id},
          {"truth", r.truth},
          {"prediction", r.prediction},
          {"provenance", provenance_name(r.provenance)},
          {"abs_error", r.abs_error},
          {"cum_mae", r.cum_mae},
          {"cum_r2", optional_json(r.cum_r2)},
          {"elapsed_ns", r.elapsed_ns},
          {"drifted", r.drifted},
          {"p_value", optional_json(r.p_value)},
          {"model_version", r.model_version}};
}

}  // namespace detail

inline nlohmann::json summary_json(const ExperimentReport& r) {
  const auto& s = r.summary;
  return {{"mode", mode_name(r.params.mode)},
          {"tau", r.params.tau},
          {"beta", r.params.beta},
          {"detection_enabled", r.params.detection_enabled},
          {"n", s.n},
          {"final_mae", s.final_mae},
          {"final_r2", detail::optional_json(s.final_r2)},
          {"total_ns", s.total_ns},
          {"retrains", s.retrains},
          {"evaluations", s.evaluations},
          {"detections", s.detections},
          {"median_ml_ns", s.median_ml_ns},
          {"median_standard_ns", s.median_standard_ns}};
}

/// Writes the report. CSV columns are `kReportCsvHeader`; empty cells mean
/// "undefined". Output depends only on the report contents.
inline void write_report(std::ostream& out, const ExperimentReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kCsv:
      out << kReportCsvHeader << '\n';
      for (const auto& r : report.records) {
        out << r.window_id << ',' << detail::fmt_double(r.truth) << ',' << detail::fmt_double(r.prediction) << ','
            << provenance_name(r.provenance) << ',' << detail::fmt_double(r.abs_error) << ','
            << detail::fmt_double(r.cum_mae) << ',' << detail::fmt_optional(r.cum_r2) << ',' << r.elapsed_ns << ','
            << (r.drifted ? 1 : 0) << ',' << detail::fmt_optional(r.p_value) << ',' << r.model_version << '\n';
      }
      break;
    case ReportFormat::kJsonl:
      for (const auto& r : report.records) out << detail::record_json(r).dump() << '\n';
      break;
    case ReportFormat::kSummaryJson:
      out << summary_json(report).dump(2) << '\n';
      break;
  }
}

inline void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write report " + path.string());
  write_report(out, report, format);
  if (!out.flush()) throw Error("cannot write report " + path.string());
}

/// Parses CSV written by write_report back into records.
inline std::vector<ExperimentRecord> parse_report_csv(std::istream& in) {
  std::vector<ExperimentRecord> out;
  std::string line;
  if (!std::getline(in, line) || line != kReportCsvHeader) throw Error("report csv: bad header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cells.size() != 11) throw Error("report csv: line " + std::to_string(line_no) + " has wrong column count");
    auto opt = [&](std::string_view c) -> std::optional<double> {
      if (c.empty()) return std::nullopt;
      return detail::parse_number<double>(c, line_no);
    };
    ExperimentRecord r;
    r.window_id = detail::parse_number<std::uint64_t>(cells[0], line_no);
    r.truth = detail::parse_number<double>(cells[1], line_no);
    r.prediction = detail::parse_number<double>(cells[2], line_no);
    r.provenance = cells[3] == "ml" ? Provenance::kMl : Provenance::kStandard;
    r.abs_error = detail::parse_number<double>(cells[4], line_no);
    r.cum_mae = detail::parse_number<double>(cells[5], line_no);
    r.cum_r2 = opt(cells[6]);
    r.elapsed_ns = detail::parse_number<std::int64_t>(cells[7], line_no);
    r.drifted = cells[8] == "1";
    r.p_value = opt(cells[9]);
    r.model_version = detail::parse_number<std::uint64_t>(cells[10], line_no);
    out.push_back(r);
  }
  return out;
}

inline ExperimentSummary parse_summary_json(const nlohmann::json& j, ExperimentParams* params = nullptr) {
  ExperimentSummary s;
  j.at("n").get_to(s.n);
  j.at("final_mae").get_to(s.final_mae);
  if (!j.at("final_r2").is_null()) s.final_r2 = j.at("final_r2").get<double>();
  j.at("total_ns").get_to(s.total_ns);
  j.at("retrains").get_to(s.retrains);
  j.at("evaluations").get_to(s.evaluations);
  j.at("detections").get_to(s.detections);
  j.at("median_ml_ns").get_to(s.median_ml_ns);
  j.at("median_standard_ns").get_to(s.median_standard_ns);
  if (params) {
    params->mode = parse_mode(j.at("mode").get<std::string>());
    j.at("tau").get_to(params->tau);
    j.at("beta").get_to(params->beta);
    j.at("detection_enabled").get_to(params->detection_enabled);
  }
  return s;
}

/// Copy of `report` with every wall-clock field zeroed.
inline ExperimentReport without_timing(ExperimentReport report) {
  for (auto& r : report.records) r.elapsed_ns = 0;
  report.summary.total_ns = 0;
  report.summary.median_ml_ns = 0;
  report.summary.median_standard_ns = 0;
  return report;
}

/// Runs adaptive, static and standard modes on one shared stream.
inline std::vector<ExperimentReport> run_bench(const ExperimentContext& ctx) {
  const auto& c = ctx.config;
  return {run_experiment(ctx, {Mode::kAdaptive, c.tau, c.beta, true}),
          run_experiment(ctx, {Mode::kStatic, c.tau, c.beta, true}),
          run_experiment(ctx, {Mode::kStandard, c.tau, c.beta, true})};
}

}  // namespace adq

#endif  // ADQ_HARNESS_HPP_
