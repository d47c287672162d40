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

// Helpers and independent reference implementations shared by the unit and
// acceptance tests. Nothing here calls into the scoring code it checks.

#ifndef ADQ_TESTS_SUPPORT_HPP_
#define ADQ_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "adq/adq.hpp"

namespace adq::testing {

inline DataWindow make_window(std::uint64_t id, const std::vector<std::optional<double>>& values) {
  DataWindow w;
  w.window_id = id;
  std::int64_t t = static_cast<std::int64_t>(id * 1000);
  for (const auto& v : values) w.readings.push_back(Reading{t++, v});
  return w;
}

inline DataWindow make_window(std::uint64_t id, const std::vector<double>& values) {
  std::vector<std::optional<double>> opt(values.begin(), values.end());
  return make_window(id, opt);
}

/// Random window around `center` with some missing and out-of-range values.
inline DataWindow random_window(std::uint64_t seed, std::uint64_t id, std::size_t n = 200, double center = 80.0,
                                double spread = 12.0, double missing_p = 0.05) {
  CounterRng rng(seed, id);
  std::vector<std::optional<double>> v;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < missing_p) {
      v.emplace_back();
    } else {
      double x = center + spread * rng.normal();
      if (rng.uniform() < 0.02) x += 200.0;
      v.emplace_back(x);
    }
  }
  return make_window(id, v);
}

// ---- oracles ----

/// Two-sample KS by evaluating both ECDFs at every pooled point with direct counting.
inline double brute_ks(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> z = x;
  z.insert(z.end(), y.begin(), y.end());
  double best = 0.0;
  for (double t : z) {
    std::size_t i = 0;
    std::size_t j = 0;
    for (double a : x) i += a <= t ? 1 : 0;
    for (double b : y) j += b <= t ? 1 : 0;
    best = std::max(best, std::fabs(double(i) / x.size() - double(j) / y.size()));
  }
  return best;
}

/// KS with ECDFs from binary search; fast enough for large reference samples.
inline double ks_by_search(std::vector<double> x, std::vector<double> y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double best = 0.0;
  auto check = [&](double t) {
    const auto i = std::upper_bound(x.begin(), x.end(), t) - x.begin();
    const auto j = std::upper_bound(y.begin(), y.end(), t) - y.begin();
    best = std::max(best, std::fabs(double(i) / x.size() - double(j) / y.size()));
  };
  for (double t : x) check(t);
  for (double t : y) check(t);
  return best;
}

/// JSD in its mixture-KL form, base 2.
inline double kl_form_jsd(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) d += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0) d += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return d;
}

/// Histogram on explicit edges by linear search; outside values land in the end bins.
inline std::vector<double> histogram_on(const std::vector<double>& values, const std::vector<double>& edges,
                                        double smoothing) {
  const std::size_t b = edges.size() - 1;
  std::vector<double> counts(b, smoothing);
  for (double x : values) {
    std::size_t k = 0;
    while (k + 1 < b && x >= edges[k + 1]) ++k;
    counts[k] += 1.0;
  }
  double total = 0.0;
  for (double c : counts) total += c;
  for (double& c : counts) c /= total;
  return counts;
}

struct OracleScore {
  std::array<double, 5> q{};
  double unified = 0.0;
};

/// Standard path written out line by line from the artifact fields.
inline OracleScore straight_line_standard(const DataWindow& w, const StandardArtifacts& art) {
  OracleScore out;
  const double n = static_cast<double>(w.readings.size());
  std::vector<double> present;
  double anomalous = 0;
  double missing = 0;
  double consistent = 0;
  for (const auto& r : w.readings) {
    if (!r.value) {
      missing += 1;
      continue;
    }
    const double x = *r.value;
    present.push_back(x);
    const double dev = std::fabs(x - art.anomaly.ref_median);
    const bool bad = art.anomaly.ref_mad == 0 ? dev != 0 : dev / (1.4826 * art.anomaly.ref_mad) > art.anomaly.cutoff;
    if (bad) anomalous += 1;
    if (x >= art.constraints.min_value && x <= art.constraints.max_value) consistent += 1;
  }
  if (present.empty()) {
    out.q = {0.0, 1.0, 0.0, 1.0, 1.0};
  } else {
    out.q[0] = anomalous / n;
    out.q[1] = missing / n;
    out.q[2] = consistent / n;
    const auto ref = art.reference.sample.sorted();
    out.q[3] = ks_by_search(present, std::vector<double>(ref.begin(), ref.end()));
    const auto& pdf = art.reference.skew_pdf;
    out.q[4] = kl_form_jsd(histogram_on(present, pdf.bin_edges, art.reference.skew_smoothing), pdf.probs);
  }
  const auto& s = art.aggregator.standardizer;
  const auto& l = art.aggregator.pca.loadings;
  for (std::size_t i = 0; i < 5; ++i) {
    const double z = s.stds[i] == 0 ? 0.0 : (out.q[i] - s.means[i]) / s.stds[i];
    out.unified += l[i] * z;
  }
  return out;
}

inline double brute_mae(const std::vector<double>& y, const std::vector<double>& yhat) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::fabs(y[i] - yhat[i]);
  return s / y.size();
}

inline double brute_r2(const std::vector<double>& y, const std::vector<double>& yhat) {
  double mean = 0;
  for (double v : y) mean += v;
  mean /= y.size();
  double num = 0;
  double den = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    den += (y[i] - mean) * (y[i] - mean);
  }
  return 1 - num / den;
}

/// Random probability vector; `sparse` zeroes about 40% of the bins.
inline std::vector<double> random_pdf(CounterRng& rng, std::size_t bins, bool sparse) {
  std::vector<double> p(bins);
  double total = 0;
  for (auto& x : p) {
    x = (sparse && rng.uniform() < 0.4) ? 0.0 : rng.uniform();
    total += x;
  }
  if (total == 0) {
    p[0] = 1;
    total = 1;
  }
  for (auto& x : p) x /= total;
  return p;
}

/// Small development config that keeps unit tests fast.
inline EngineConfig small_config(std::uint64_t seed = 6) {
  auto c = default_config();
  c.seed = seed;
  c.stream.seed = seed;
  c.mutation.seed = seed;
  c.window_len = 50;
  c.stream.window_len = 50;
  c.stream.n_windows = 160;
  c.train_windows = 100;
  c.gbt.n_trees = 30;
  c.dev_oracle.tolerance.threshold = 0.5;
  return c;
}

inline std::vector<DataWindow> small_stream(const EngineConfig& c) {
  return segment_stream(generate_pump_stream(c.stream), c.window_len);
}

}  // namespace adq::testing

#endif  // ADQ_TESTS_SUPPORT_HPP_
