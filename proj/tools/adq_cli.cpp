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

// Command-line front end: stream generation, mutation, development, scoring
// and the benchmark harness.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adq/adq.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Globals {
  std::string config_path;
  std::string store = "store";
  std::optional<std::uint64_t> seed;
  std::string out;
};

adq::EngineConfig load(const Globals& g) {
  auto c = g.config_path.empty() ? adq::default_config() : adq::load_config(g.config_path);
  if (g.seed) {
    c.seed = *g.seed;
    c.stream.seed = *g.seed;
    c.mutation.seed = *g.seed;
  }
  adq::validate(c);
  return c;
}

bool is_jsonl(const std::string& path) {
  const auto ext = fs::path(path).extension().string();
  return ext == ".jsonl" || ext == ".json";
}

std::vector<adq::Reading> read_stream(const std::string& path, const std::string& format) {
  const bool jsonl = format == "jsonl" || (format == "auto" && is_jsonl(path));
  if (path.empty() || path == "-") {
    return jsonl ? adq::read_stream_jsonl(std::cin) : adq::read_stream_csv(std::cin);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw adq::StreamError("cannot open stream file " + path);
  return jsonl ? adq::read_stream_jsonl(in) : adq::read_stream_csv(in);
}

// Runs `fn` with the --out file, or stdout when none was given.
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw adq::Error("cannot write " + path);
  fn(out);
  if (!out.flush()) throw adq::Error("cannot write " + path);
}

void write_stream(const std::string& path, std::span<const adq::Reading> readings) {
  with_output(path, [&](std::ostream& os) {
    if (is_jsonl(path)) {
      adq::write_stream_jsonl(os, readings);
    } else {
      adq::write_stream_csv(os, readings);
    }
  });
}

std::vector<double> parse_taus(const std::string& text) {
  std::vector<double> taus;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = adq::detail::trim(item);
    if (t.empty()) continue;
    try {
      taus.push_back(adq::detail::parse_number<double>(t, 0));
    } catch (const adq::Error&) {
      throw adq::ConfigError("--taus: bad value '" + std::string(t) + "'");
    }
  }
  if (taus.empty()) throw adq::ConfigError("--taus: no values given");
  return taus;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drift-aware adaptive data-quality scoring"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "YAML engine configuration")->check(CLI::ExistingFile);
  app.add_option("--store", g.store, "Artifact store directory");
  app.add_option("--seed", g.seed, "Override every seed in the configuration");
  app.add_option("--out", g.out, "Output path (stdout when omitted; a directory for bench)");

  std::string in_path;
  std::string in_format = "auto";
  auto* gen = app.add_subcommand("gen", "Write a synthetic pump stream");

  auto* mutate = app.add_subcommand("mutate", "Apply the configured mutation plan to a stream");
  std::string ledger_path;
  mutate->add_option("--in", in_path, "Input stream (CSV or JSONL; '-' for stdin)")->required();
  mutate->add_option("--format", in_format, "Input format")->check(CLI::IsMember({"auto", "csv", "jsonl"}));
  mutate->add_option("--ledger", ledger_path, "Fault ledger (JSON lines)");

  auto* develop = app.add_subcommand("develop", "Build and store the version-1 bundle");
  develop->add_option("--in", in_path, "Training stream; the configured generator is used when omitted");
  develop->add_option("--format", in_format, "Input format")->check(CLI::IsMember({"auto", "csv", "jsonl"}));

  auto* run = app.add_subcommand("run", "Score a stream with the latest stored bundle");
  std::string mode_name = "adaptive";
  std::optional<std::uint64_t> version;
  run->add_option("--mode", mode_name, "Pipeline mode")->check(CLI::IsMember({"adaptive", "static", "standard"}));
  run->add_option("--in", in_path, "Stream to score ('-' or omitted for stdin)");
  run->add_option("--format", in_format, "Input format")->check(CLI::IsMember({"auto", "csv", "jsonl"}));
  run->add_option("--version", version, "Bundle version to start from (default LATEST)");

  auto* bench = app.add_subcommand("bench", "Compare adaptive, static and standard modes on one stream");
  bool frozen = false;
  bench->add_flag("--frozen", frozen, "Also run adaptive mode with detection disabled");

  auto* sweep = app.add_subcommand("sweep", "Count detections over several significance thresholds");
  std::string taus_text;
  sweep->add_option("--taus", taus_text, "Comma-separated thresholds")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const auto cfg = load(g);

    if (gen->parsed()) {
      write_stream(g.out, adq::generate_pump_stream(cfg.stream));
    } else if (mutate->parsed()) {
      const auto readings = read_stream(in_path, in_format);
      const auto windows = adq::segment_stream(readings, cfg.window_len);
      const auto result = adq::apply_mutation_plan(windows, cfg.mutation);
      write_stream(g.out, adq::flatten(result.windows));
      if (!ledger_path.empty()) {
        with_output(ledger_path, [&](std::ostream& os) { adq::write_fault_ledger(os, result.ledger); });
      }
    } else if (develop->parsed()) {
      std::vector<adq::DataWindow> windows;
      if (in_path.empty()) {
        auto all = adq::segment_stream(adq::generate_pump_stream(cfg.stream), cfg.window_len);
        windows.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(std::min(cfg.train_windows, all.size())));
      } else {
        windows = adq::segment_stream(read_stream(in_path, in_format), cfg.window_len);
      }
      const auto result = adq::develop_phase(windows, cfg);
      const auto dir = adq::store_save(result.bundle, g.store);
      nlohmann::json attempts = nlohmann::json::array();
      for (const auto& a : result.diagnostics.attempts) {
        attempts.push_back({{"mae", a.mae ? nlohmann::json(*a.mae) : nlohmann::json(nullptr)},
                            {"r2", a.r2 ? nlohmann::json(*a.r2) : nlohmann::json(nullptr)},
                            {"pass", a.pass}});
      }
      nlohmann::json summary = {{"version", result.bundle.version().version},
                                {"path", dir.string()},
                                {"windows", windows.size()},
                                {"mutated_windows", result.diagnostics.mutated_windows},
                                {"n_trees", result.diagnostics.n_trees},
                                {"attempts", attempts}};
      with_output(g.out, [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
    } else if (run->parsed()) {
      auto bundle = adq::store_load(g.store, version);
      auto st = adq::make_pipeline(adq::parse_mode(mode_name), std::move(bundle), cfg);
      const fs::path store_root = g.store;
      st.on_new_version = [&store_root](const adq::ArtifactBundle& b) { adq::store_save(b, store_root); };
      const auto readings = read_stream(in_path, in_format);
      const auto windows = adq::segment_stream(readings, cfg.window_len);
      with_output(g.out, [&](std::ostream& os) {
        for (const auto& w : windows) os << adq::to_output_json(adq::process_window(st, w)).dump() << '\n';
      });
    } else if (bench->parsed()) {
      const auto ctx = adq::prepare_experiment(cfg);
      auto reports = adq::run_bench(ctx);
      if (frozen) reports.push_back(adq::run_experiment(ctx, {adq::Mode::kAdaptive, cfg.tau, cfg.beta, false}));
      nlohmann::json summaries = nlohmann::json::array();
      for (const auto& r : reports) summaries.push_back(adq::summary_json(r));
      if (!g.out.empty()) {
        fs::create_directories(g.out);
        for (const auto& r : reports) {
          std::string stem = adq::mode_name(r.params.mode);
          if (!r.params.detection_enabled) stem += "_frozen";
          adq::emit_report(r, adq::ReportFormat::kCsv, fs::path(g.out) / (stem + ".csv"));
          adq::emit_report(r, adq::ReportFormat::kSummaryJson, fs::path(g.out) / (stem + ".summary.json"));
        }
      }
      std::cout << summaries.dump(2) << '\n';
    } else if (sweep->parsed()) {
      const auto taus = parse_taus(taus_text);
      const auto ctx = adq::prepare_experiment(cfg);
      const auto result = adq::sensitivity_sweep(taus, ctx);
      nlohmann::json out = nlohmann::json::array();
      for (const auto& [tau, count] : result.detections) {
        out.push_back({{"tau", tau}, {"detections", count}, {"tested", result.p_values.size()}});
      }
      with_output(g.out, [&](std::ostream& os) { os << out.dump(2) << '\n'; });
    }
  } catch (const adq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
