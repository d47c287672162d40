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

#ifndef ADQ_STORE_HPP_
#define ADQ_STORE_HPP_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adq/orchestrator.hpp"
#include "json.hpp"

/*
 * On-disk layout of the artifact store:
 *
 *   <root>/LATEST                 current version number
 *   <root>/v<NNN>/model.json      regressor trees and hyperparameters
 *                 standardizer.json
 *                 pca.json
 *                 anomaly.json    robust z-score detector
 *                 reference_sample.csv
 *                 reference_pdf.json  drift and skewness histograms
 *                 divergences.log one divergence per line
 *                 meta.json       version record, lineage, constraints, detector settings
 *                 history.jsonl   training windows with their quality vectors
 *                 deltas.csv      re-scoring deltas (adaptation versions only)
 *
 * A version directory is written under a temporary name and renamed into
 * place, and LATEST is replaced the same way, so readers never see a partial
 * bundle.
 */

namespace adq {

namespace fs = std::filesystem;

inline std::string version_dir_name(std::uint64_t version) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "v%03llu", static_cast<unsigned long long>(version));
  return buf;
}

namespace detail {

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw StoreError("cannot write " + path.string());
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("missing artifact file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw StoreError("corrupt artifact file " + path.string() + ": " + e.what());
  }
}

inline nlohmann::json pdf_json(const Pdf& p) { return {{"bin_edges", p.bin_edges}, {"probs", p.probs}}; }

inline Pdf pdf_from_json(const nlohmann::json& j) {
  Pdf p;
  j.at("bin_edges").get_to(p.bin_edges);
  j.at("probs").get_to(p.probs);
  if (p.bin_edges.size() != p.probs.size() + 1 || p.probs.size() < 2) throw StoreError("malformed histogram");
  return p;
}

inline nlohmann::json version_json(const ModelVersion& v) {
  nlohmann::json j = {{"version", v.version},
                      {"trigger", trigger_name(v.trigger)},
                      {"created_at", v.created_at},
                      {"parent", nullptr}};
  if (v.parent) j["parent"] = *v.parent;
  return j;
}

inline ModelVersion version_from_json(const nlohmann::json& j) {
  ModelVersion v;
  j.at("version").get_to(v.version);
  v.trigger = parse_trigger(j.at("trigger").get<std::string>());
  j.at("created_at").get_to(v.created_at);
  if (!j.at("parent").is_null()) v.parent = j.at("parent").get<std::uint64_t>();
  return v;
}

inline std::string dump_double(double x) { return nlohmann::json(x).dump(); }

}  // namespace detail

/// Serializes every artifact of `bundle` into a fresh version directory and
/// points LATEST at it. Returns the directory.
inline fs::path store_save(const ArtifactBundle& bundle, const fs::path& root) {
  using detail::write_file;
  const auto version = bundle.version().version;
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw StoreError("cannot create store root " + root.string() + ": " + ec.message());
  const auto final_dir = root / version_dir_name(version);
  if (fs::exists(final_dir)) throw StoreError("version already stored: " + final_dir.string());
  const auto tmp_dir = root / ("." + version_dir_name(version) + ".tmp");
  fs::remove_all(tmp_dir, ec);
  fs::create_directories(tmp_dir, ec);
  if (ec) throw StoreError("cannot create " + tmp_dir.string() + ": " + ec.message());

  const auto& art = bundle.standard;
  write_file(tmp_dir / "model.json", nlohmann::json(bundle.model).dump(1) + "\n");
  write_file(tmp_dir / "standardizer.json", nlohmann::json(art.aggregator.standardizer).dump(1) + "\n");
  write_file(tmp_dir / "pca.json", nlohmann::json(art.aggregator.pca).dump(1) + "\n");
  write_file(tmp_dir / "anomaly.json", nlohmann::json{{"format_version", 1},
                                                      {"kind", "robust_z"},
                                                      {"ref_median", art.anomaly.ref_median},
                                                      {"ref_mad", art.anomaly.ref_mad},
                                                      {"cutoff", art.anomaly.cutoff}}
                                                .dump(1) +
                                            "\n");
  {
    std::string csv = "value\n";
    for (double x : art.reference.sample.sorted()) csv += detail::dump_double(x) + "\n";
    write_file(tmp_dir / "reference_sample.csv", csv);
  }
  write_file(tmp_dir / "reference_pdf.json", nlohmann::json{{"format_version", 1},
                                                            {"drift", detail::pdf_json(bundle.detector.reference_pdf)},
                                                            {"skewness", detail::pdf_json(art.reference.skew_pdf)},
                                                            {"skew_smoothing", art.reference.skew_smoothing}}
                                                      .dump(1) +
                                                  "\n");
  {
    std::ostringstream log;
    write_divergence_log(log, bundle.detector.divergence_history);
    write_file(tmp_dir / "divergences.log", log.str());
  }
  {
    nlohmann::json lineage = nlohmann::json::array();
    for (const auto& v : bundle.lineage) lineage.push_back(detail::version_json(v));
    const auto& d = bundle.detector;
    nlohmann::json meta = {
        {"format_version", 1},
        {"version", detail::version_json(bundle.version())},
        {"lineage", lineage},
        {"constraints", {{"min", art.constraints.min_value}, {"max", art.constraints.max_value}}},
        {"detector",
         {{"tau", d.tau},
          {"min_history", d.min_history},
          {"smoothing", d.smoothing},
          {"pad_fraction", d.pad_fraction},
          {"rule", d.rule == DriftRule::kPValue ? "pvalue" : "threshold"},
          {"zeta", d.zeta}}},
        {"aggregation_refit_on_retrain", true},
    };
    write_file(tmp_dir / "meta.json", meta.dump(1) + "\n");
  }
  {
    std::string lines;
    for (const auto& e : bundle.history) {
      nlohmann::json t = nlohmann::json::array();
      nlohmann::json v = nlohmann::json::array();
      for (const auto& r : e.window.readings) {
        t.push_back(r.timestamp);
        v.push_back(r.value ? nlohmann::json(*r.value) : nlohmann::json(nullptr));
      }
      lines += nlohmann::json{{"window_id", e.window.window_id},
                              {"terminal", e.window.terminal},
                              {"t", std::move(t)},
                              {"v", std::move(v)},
                              {"quality", e.quality.values},
                              {"score", e.score}}
                   .dump() +
               "\n";
    }
    write_file(tmp_dir / "history.jsonl", lines);
  }
  if (!bundle.rescore_deltas.empty()) {
    std::string csv = "window_id,accuracy,completeness,consistency,timeliness,skewness\n";
    for (const auto& d : bundle.rescore_deltas) {
      csv += std::to_string(d.window_id);
      for (double x : d.delta) csv += "," + detail::dump_double(x);
      csv += "\n";
    }
    write_file(tmp_dir / "deltas.csv", csv);
  }

  fs::rename(tmp_dir, final_dir, ec);
  if (ec) throw StoreError("cannot publish " + final_dir.string() + ": " + ec.message());
  const auto latest_tmp = root / ".LATEST.tmp";
  write_file(latest_tmp, std::to_string(version) + "\n");
  fs::rename(latest_tmp, root / "LATEST", ec);
  if (ec) throw StoreError("cannot update LATEST: " + ec.message());
  return final_dir;
}

inline std::optional<std::uint64_t> store_latest(const fs::path& root) {
  const auto path = root / "LATEST";
  if (!fs::exists(path)) return std::nullopt;
  const auto text = detail::read_file(path);
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw StoreError("corrupt artifact file " + path.string());
  }
}

/// Loads `version`, or the LATEST one when empty.
inline ArtifactBundle store_load(const fs::path& root, std::optional<std::uint64_t> version = std::nullopt) {
  if (!version) version = store_latest(root);
  if (!version) throw StoreError("no LATEST in store " + root.string());
  const auto dir = root / version_dir_name(*version);
  if (!fs::is_directory(dir)) throw StoreError("no such version directory " + dir.string());

  ArtifactBundle b;
  auto& art = b.standard;
  auto guarded = [](const fs::path& path, auto&& fn) {
    try {
      fn();
    } catch (const StoreError&) {
      throw;
    } catch (const std::exception& e) {
      throw StoreError("corrupt artifact file " + path.string() + ": " + e.what());
    }
  };

  guarded(dir / "model.json", [&] { b.model = detail::read_json(dir / "model.json").get<GbtModel>(); });
  guarded(dir / "standardizer.json",
          [&] { art.aggregator.standardizer = detail::read_json(dir / "standardizer.json").get<Standardizer>(); });
  guarded(dir / "pca.json", [&] { art.aggregator.pca = detail::read_json(dir / "pca.json").get<PcaModel>(); });
  guarded(dir / "anomaly.json", [&] {
    const auto j = detail::read_json(dir / "anomaly.json");
    j.at("ref_median").get_to(art.anomaly.ref_median);
    j.at("ref_mad").get_to(art.anomaly.ref_mad);
    j.at("cutoff").get_to(art.anomaly.cutoff);
  });
  guarded(dir / "reference_sample.csv", [&] {
    std::istringstream in(detail::read_file(dir / "reference_sample.csv"));
    std::string header;
    std::getline(in, header);
    if (detail::trim(header) != "value") throw StoreError("corrupt artifact file " + (dir / "reference_sample.csv").string());
    art.reference.sample = ReferenceSample(read_divergence_log(in));
  });
  guarded(dir / "reference_pdf.json", [&] {
    const auto j = detail::read_json(dir / "reference_pdf.json");
    b.detector.reference_pdf = detail::pdf_from_json(j.at("drift"));
    art.reference.skew_pdf = detail::pdf_from_json(j.at("skewness"));
    j.at("skew_smoothing").get_to(art.reference.skew_smoothing);
  });
  guarded(dir / "divergences.log", [&] {
    std::istringstream in(detail::read_file(dir / "divergences.log"));
    b.detector.divergence_history = read_divergence_log(in);
  });
  guarded(dir / "meta.json", [&] {
    const auto j = detail::read_json(dir / "meta.json");
    for (const auto& v : j.at("lineage")) b.lineage.push_back(detail::version_from_json(v));
    if (b.lineage.empty() || b.lineage.back().version != *version) throw StoreError("corrupt artifact file " + (dir / "meta.json").string() + ": lineage does not end at this version");
    j.at("constraints").at("min").get_to(art.constraints.min_value);
    j.at("constraints").at("max").get_to(art.constraints.max_value);
    const auto& d = j.at("detector");
    d.at("tau").get_to(b.detector.tau);
    d.at("min_history").get_to(b.detector.min_history);
    d.at("smoothing").get_to(b.detector.smoothing);
    d.at("pad_fraction").get_to(b.detector.pad_fraction);
    b.detector.rule = d.at("rule").get<std::string>() == "pvalue" ? DriftRule::kPValue : DriftRule::kThreshold;
    d.at("zeta").get_to(b.detector.zeta);
  });
  guarded(dir / "history.jsonl", [&] {
    std::istringstream in(detail::read_file(dir / "history.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
      if (detail::trim(line).empty()) continue;
      const auto j = nlohmann::json::parse(line);
      DataWindow w;
      j.at("window_id").get_to(w.window_id);
      j.at("terminal").get_to(w.terminal);
      const auto& t = j.at("t");
      const auto& v = j.at("v");
      if (t.size() != v.size()) throw StoreError("corrupt artifact file " + (dir / "history.jsonl").string());
      for (std::size_t i = 0; i < t.size(); ++i) {
        Reading r;
        r.timestamp = t[i].get<std::int64_t>();
        if (!v[i].is_null()) r.value = v[i].get<double>();
        w.readings.push_back(r);
      }
      HistoryEntry e;
      e.sorted_present = window_values(w).present;
      std::sort(e.sorted_present.begin(), e.sorted_present.end());
      e.features = extract_features(w, art.constraints);
      j.at("quality").get_to(e.quality.values);
      j.at("score").get_to(e.score);
      e.window = std::move(w);
      b.history.push_back(std::move(e));
    }
  });
  if (fs::exists(dir / "deltas.csv")) {
    guarded(dir / "deltas.csv", [&] {
      std::istringstream in(detail::read_file(dir / "deltas.csv"));
      std::string line;
      std::getline(in, line);
      std::size_t line_no = 1;
      while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        RescoreDelta d;
        std::size_t start = 0;
        for (std::size_t field = 0; field <= kNumDimensions; ++field) {
          const auto comma = line.find(',', start);
          const auto text = detail::trim(std::string_view(line).substr(start, comma - start));
          if (field == 0) {
            d.window_id = detail::parse_number<std::uint64_t>(text, line_no);
          } else {
            d.delta[field - 1] = detail::parse_number<double>(text, line_no);
          }
          start = comma + 1;
        }
        b.rescore_deltas.push_back(d);
      }
    });
  }
  return b;
}

}  // namespace adq

#endif  // ADQ_STORE_HPP_
