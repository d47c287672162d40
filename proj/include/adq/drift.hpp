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

#ifndef ADQ_DRIFT_HPP_
#define ADQ_DRIFT_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adq/common.hpp"
#include "adq/windowing.hpp"

namespace adq {

/// Histogram density over equal-width bins. `probs` sums to one.
struct Pdf {
  std::vector<double> bin_edges;  // size bins() + 1, strictly ascending
  std::vector<double> probs;

  std::size_t bins() const { return probs.size(); }
  double lo() const { return bin_edges.front(); }
  double hi() const { return bin_edges.back(); }

  bool same_grid(const Pdf& other) const { return bin_edges == other.bin_edges; }

  friend bool operator==(const Pdf&, const Pdf&) = default;
};

namespace detail {

inline std::vector<double> equal_width_edges(std::size_t bins, double lo, double hi) {
  std::vector<double> edges(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + width * static_cast<double>(i);
  edges.back() = hi;
  return edges;
}

// Out-of-range values clamp into the boundary bins.
inline std::size_t bin_index(double x, double lo, double hi, std::size_t bins) {
  if (!(x > lo)) return 0;
  if (x >= hi) return bins - 1;
  const auto idx = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins));
  return std::min(idx, bins - 1);
}

inline Pdf normalize_counts(std::vector<double> edges, std::vector<double> counts, double smoothing) {
  double total = 0.0;
  for (auto& c : counts) {
    c += smoothing;
    total += c;
  }
  for (auto& c : counts) c /= total;
  return Pdf{std::move(edges), std::move(counts)};
}

}  // namespace detail

/// Equal-width histogram of `sample` over [lo, hi] with `smoothing` added to
/// every bin count before normalization.
inline Pdf estimate_pdf(std::span<const double> sample, std::size_t bins, double lo, double hi,
                        double smoothing = 0.0) {
  if (bins < 2) throw ConfigError("estimate_pdf: need at least 2 bins");
  if (!(lo < hi)) throw ConfigError("estimate_pdf: range must satisfy lo < hi");
  if (smoothing < 0.0) throw ConfigError("estimate_pdf: smoothing must be non-negative");
  if (sample.empty()) throw FitError("estimate_pdf: empty sample");
  std::vector<double> counts(bins, 0.0);
  for (double x : sample) counts[detail::bin_index(x, lo, hi, bins)] += 1.0;
  return detail::normalize_counts(detail::equal_width_edges(bins, lo, hi), std::move(counts), smoothing);
}

/// Histogram of `sample` on the bin grid of `grid`.
inline Pdf estimate_pdf_like(std::span<const double> sample, const Pdf& grid, double smoothing = 0.0) {
  if (sample.empty()) throw FitError("estimate_pdf: empty sample");
  const std::size_t bins = grid.bins();
  const double lo = grid.lo();
  const double hi = grid.hi();
  std::vector<double> counts(bins, 0.0);
  for (double x : sample) counts[detail::bin_index(x, lo, hi, bins)] += 1.0;
  return detail::normalize_counts(grid.bin_edges, std::move(counts), smoothing);
}

/// [min, max] of `sample` widened by `pad_fraction` of the span on each side.
inline std::pair<double, double> padded_range(std::span<const double> sample, double pad_fraction = 0.05) {
  if (sample.empty()) throw FitError("padded_range: empty sample");
  auto [mn, mx] = std::minmax_element(sample.begin(), sample.end());
  double lo = *mn;
  double hi = *mx;
  if (hi - lo <= 0.0) {
    const double half = 0.5 * std::max(1.0, std::abs(lo));
    lo -= half;
    hi += half;
  }
  const double pad = (hi - lo) * pad_fraction;
  return {lo - pad, hi + pad};
}

/// Shannon entropy in bits, with 0 log 0 = 0.
inline double shannon_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

inline double shannon_entropy(const Pdf& p) { return shannon_entropy(p.probs); }

/// Base-2 Jensen-Shannon divergence of two distributions over the same bins.
/// Clamped to [0, 1] to absorb rounding.
inline double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ConfigError("jsd: distributions have different bin counts");
  double mix_entropy = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (m > 0.0) mix_entropy -= m * std::log2(m);
  }
  const double d = mix_entropy - 0.5 * (shannon_entropy(p) + shannon_entropy(q));
  return std::clamp(d, 0.0, 1.0);
}

inline double jsd(const Pdf& p, const Pdf& q) {
  if (!p.same_grid(q)) throw ConfigError("jsd: distributions are on different bin grids");
  return jsd(p.probs, q.probs);
}

/// Add-one empirical p-value: (1 + #{h >= d}) / (1 + |history|).
inline double empirical_p_value(std::span<const double> history, double d) {
  if (history.empty()) throw ConfigError("empirical_p_value: empty history");
  std::size_t at_least = 0;
  for (double h : history) at_least += (h >= d) ? 1 : 0;
  return static_cast<double>(1 + at_least) / static_cast<double>(1 + history.size());
}

enum class DriftRule {
  kPValue,     // default: empirical p-value of the divergence against its history
  kThreshold,  // legacy fixed cut-off: divergence > zeta
};

struct DriftDetectorState {
  Pdf reference_pdf;
  std::vector<double> divergence_history;
  double tau = 0.05;
  std::size_t min_history = 30;
  double smoothing = 0.0;
  double pad_fraction = 0.05;
  DriftRule rule = DriftRule::kPValue;
  double zeta = 0.1;
  friend bool operator==(const DriftDetectorState&, const DriftDetectorState&) = default;
};

struct DriftVerdict {
  std::optional<double> divergence;  // empty for windows with no present values
  std::optional<double> p_value;
  bool drifted = false;
  bool warmed_up = false;
  bool fault = false;  // window carried no usable values
};

/// Builds a detector whose reference is the histogram of `reference_sample`
/// over its padded range.
inline DriftDetectorState make_detector(std::span<const double> reference_sample, std::size_t bins,
                                        double tau, std::size_t min_history, double smoothing = 0.0,
                                        double pad_fraction = 0.05) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("drift: tau must lie in (0, 1)");
  auto [lo, hi] = padded_range(reference_sample, pad_fraction);
  DriftDetectorState state;
  state.reference_pdf = estimate_pdf(reference_sample, bins, lo, hi, smoothing);
  state.tau = tau;
  state.min_history = min_history;
  state.smoothing = smoothing;
  state.pad_fraction = pad_fraction;
  return state;
}

/// Divergence of `values` from the reference, without touching the history.
inline double divergence_of(const DriftDetectorState& state, std::span<const double> values) {
  return jsd(state.reference_pdf, estimate_pdf_like(values, state.reference_pdf, state.smoothing));
}

/// Tests one window against the divergence history, then appends its
/// divergence to the history (flagged windows included).
inline DriftVerdict observe_values(DriftDetectorState& state, std::span<const double> values) {
  DriftVerdict verdict;
  if (values.empty()) {
    verdict.fault = true;
    verdict.warmed_up = state.divergence_history.size() >= state.min_history;
    return verdict;
  }
  const double d = divergence_of(state, values);
  verdict.divergence = d;
  verdict.warmed_up = state.divergence_history.size() >= state.min_history &&
                      !state.divergence_history.empty();
  if (verdict.warmed_up) {
    if (state.rule == DriftRule::kPValue) {
      verdict.p_value = empirical_p_value(state.divergence_history, d);
      verdict.drifted = *verdict.p_value < state.tau;
    } else {
      verdict.drifted = d > state.zeta;
    }
  }
  state.divergence_history.push_back(d);
  return verdict;
}

inline DriftVerdict observe(DriftDetectorState& state, const DataWindow& window) {
  return observe_values(state, window_values(window).present);
}

/// Re-estimates the reference histogram from a new sample. The divergence
/// history is kept.
inline void rebaseline(DriftDetectorState& state, std::span<const double> new_reference_sample) {
  if (new_reference_sample.empty()) throw FitError("rebaseline: empty reference sample");
  auto [lo, hi] = padded_range(new_reference_sample, state.pad_fraction);
  state.reference_pdf = estimate_pdf(new_reference_sample, state.reference_pdf.bins(), lo, hi, state.smoothing);
}

/// One divergence per line, shortest round-trip decimal form.
inline void write_divergence_log(std::ostream& out, std::span<const double> history) {
  for (double d : history) out << nlohmann::json(d).dump() << '\n';
}

inline std::vector<double> read_divergence_log(std::istream& in) {
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    out.push_back(detail::parse_number<double>(text, line_no));
  }
  return out;
}

}  // namespace adq

#endif  // ADQ_DRIFT_HPP_
