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

#ifndef ADQ_DIMENSIONS_HPP_
#define ADQ_DIMENSIONS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <span>
#include <vector>

#include "adq/common.hpp"
#include "adq/drift.hpp"
#include "adq/windowing.hpp"

namespace adq {

/// Inclusive value range a reading must satisfy to count as consistent.
struct IntegrityConstraints {
  double min_value = 0.0;
  double max_value = 1.0;

  bool contains(double x) const { return x >= min_value && x <= max_value; }

  friend bool operator==(const IntegrityConstraints&, const IntegrityConstraints&) = default;
};

inline void validate(const IntegrityConstraints& c) {
  if (!(c.min_value <= c.max_value)) throw ConfigError("constraints: min_value must not exceed max_value");
}

/// Robust z-score detector: x is anomalous when
/// |x - median| / (1.4826 * MAD) > cutoff. With MAD = 0 any value other than
/// the median is anomalous.
struct AnomalyDetector {
  static constexpr double kMadScale = 1.4826;

  double ref_median = 0.0;
  double ref_mad = 0.0;
  double cutoff = 3.5;

  bool is_anomalous(double x) const {
    const double dev = std::abs(x - ref_median);
    if (ref_mad == 0.0) return dev != 0.0;
    return dev / (kMadScale * ref_mad) > cutoff;
  }

  friend bool operator==(const AnomalyDetector&, const AnomalyDetector&) = default;
};

/// Anything that can classify a single value.
template <typename D>
concept ValueDetector = requires(const D& d, double x) {
  { d.is_anomalous(x) } -> std::convertible_to<bool>;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw FitError("median of empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline AnomalyDetector fit_anomaly_detector(std::span<const double> reference, double cutoff = 3.5) {
  if (reference.empty()) throw ConfigError("fit_anomaly_detector: empty reference sample");
  if (!(cutoff > 0.0)) throw ConfigError("fit_anomaly_detector: cutoff must be positive");
  AnomalyDetector det;
  det.cutoff = cutoff;
  det.ref_median = median_of(std::vector<double>(reference.begin(), reference.end()));
  std::vector<double> dev;
  dev.reserve(reference.size());
  for (double x : reference) dev.push_back(std::abs(x - det.ref_median));
  det.ref_mad = median_of(std::move(dev));
  return det;
}

/// Historical sample used by the timeliness test. Kept sorted.
class ReferenceSample {
 public:
  ReferenceSample() = default;
  explicit ReferenceSample(std::vector<double> values) : sorted_(std::move(values)) {
    if (sorted_.empty()) throw FitError("reference sample must be non-empty");
    for (double x : sorted_) {
      if (!std::isfinite(x)) throw FitError("reference sample contains a non-finite value");
    }
    std::sort(sorted_.begin(), sorted_.end());
  }

  std::span<const double> sorted() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }
  bool empty() const { return sorted_.empty(); }

  friend bool operator==(const ReferenceSample&, const ReferenceSample&) = default;

 private:
  std::vector<double> sorted_;
};

/// The five raw dimension scores of one window, in `Dimension` order.
struct QualityVector {
  std::array<double, kNumDimensions> values{};

  // Consistency counts good values; the other four formulas count defects.
  static constexpr std::array<bool, kNumDimensions> kHigherIsBetter = {false, false, true, false, false};

  double& operator[](Dimension d) { return values[static_cast<std::size_t>(d)]; }
  double operator[](Dimension d) const { return values[static_cast<std::size_t>(d)]; }

  double accuracy() const { return (*this)[Dimension::kAccuracy]; }
  double completeness() const { return (*this)[Dimension::kCompleteness]; }
  double consistency() const { return (*this)[Dimension::kConsistency]; }
  double timeliness() const { return (*this)[Dimension::kTimeliness]; }
  double skewness() const { return (*this)[Dimension::kSkewness]; }

  friend bool operator==(const QualityVector&, const QualityVector&) = default;
};

/// Quality vector assigned to a window without a single present value.
inline QualityVector all_missing_sentinel() {
  QualityVector q;
  q[Dimension::kAccuracy] = 0.0;
  q[Dimension::kCompleteness] = 1.0;
  q[Dimension::kConsistency] = 0.0;
  q[Dimension::kTimeliness] = 1.0;
  q[Dimension::kSkewness] = 1.0;
  return q;
}

/// Exact two-sample Kolmogorov-Smirnov statistic of two sorted samples.
inline double ks_statistic_sorted(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ConfigError("ks_statistic: empty sample");
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double best = 0.0;
  while (i < x.size() && j < y.size()) {
    const double z = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= z) ++i;
    while (j < y.size() && y[j] <= z) ++j;
    best = std::max(best, std::fabs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  // Past this point one ECDF is already 1 and the gap can only shrink.
  return best;
}

inline double ks_statistic(std::vector<double> x, std::vector<double> y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  return ks_statistic_sorted(x, y);
}

template <ValueDetector Detector>
double score_accuracy(const DataWindow& window, const Detector& detector) {
  if (window.readings.empty()) return 0.0;
  std::size_t anomalous = 0;
  for (const auto& r : window.readings) {
    if (r.value && detector.is_anomalous(*r.value)) ++anomalous;
  }
  return static_cast<double>(anomalous) / static_cast<double>(window.size());
}

/// Fraction of missing readings.
inline double score_completeness(const DataWindow& window) {
  if (window.readings.empty()) return 0.0;
  std::size_t missing = 0;
  for (const auto& r : window.readings) missing += r.value ? 0 : 1;
  return static_cast<double>(missing) / static_cast<double>(window.size());
}

/// Fraction of readings that are present and inside the constraint range.
inline double score_consistency(const DataWindow& window, const IntegrityConstraints& constraints) {
  if (window.readings.empty()) return 0.0;
  std::size_t consistent = 0;
  for (const auto& r : window.readings) {
    if (r.value && constraints.contains(*r.value)) ++consistent;
  }
  return static_cast<double>(consistent) / static_cast<double>(window.size());
}

inline double score_timeliness_sorted(std::span<const double> sorted_present, const ReferenceSample& reference) {
  if (sorted_present.empty()) throw DimensionError(Dimension::kTimeliness, "window has no present values");
  if (reference.empty()) throw DimensionError(Dimension::kTimeliness, "empty reference sample");
  return ks_statistic_sorted(sorted_present, reference.sorted());
}

inline double score_timeliness(const DataWindow& window, const ReferenceSample& reference) {
  auto present = window_values(window).present;
  std::sort(present.begin(), present.end());
  return score_timeliness_sorted(present, reference);
}

inline double score_skewness_values(std::span<const double> present, const Pdf& reference_pdf, double smoothing) {
  if (present.empty()) throw DimensionError(Dimension::kSkewness, "window has no present values");
  return jsd(reference_pdf, estimate_pdf_like(present, reference_pdf, smoothing));
}

/// JSD between the window histogram (on the reference grid) and the reference.
inline double score_skewness(const DataWindow& window, const Pdf& reference_pdf, double smoothing = 0.0) {
  return score_skewness_values(window_values(window).present, reference_pdf, smoothing);
}

/// Reference artifacts needed by the two dynamic dimensions.
struct DynamicReference {
  ReferenceSample sample;
  Pdf skew_pdf;          // estimated with `skew_smoothing`
  double skew_smoothing = 0.0;
  friend bool operator==(const DynamicReference&, const DynamicReference&) = default;
};

inline DynamicReference make_dynamic_reference(std::vector<double> values, std::size_t bins,
                                               double skew_smoothing, double pad_fraction = 0.05) {
  auto [lo, hi] = padded_range(values, pad_fraction);
  DynamicReference ref;
  ref.skew_pdf = estimate_pdf(values, bins, lo, hi, skew_smoothing);
  ref.skew_smoothing = skew_smoothing;
  ref.sample = ReferenceSample(std::move(values));
  return ref;
}

/// Timeliness and skewness of a window whose present values are `sorted_present`.
inline std::pair<double, double> score_dynamic(std::span<const double> sorted_present, const DynamicReference& ref) {
  return {score_timeliness_sorted(sorted_present, ref.sample),
          score_skewness_values(sorted_present, ref.skew_pdf, ref.skew_smoothing)};
}

/// Scores all five dimensions. Throws DimensionError naming the first
/// dimension that cannot be computed.
template <ValueDetector Detector>
QualityVector score_all(const DataWindow& window, const Detector& detector,
                        const IntegrityConstraints& constraints, const DynamicReference& ref) {
  QualityVector q;
  q[Dimension::kAccuracy] = score_accuracy(window, detector);
  q[Dimension::kCompleteness] = score_completeness(window);
  q[Dimension::kConsistency] = score_consistency(window, constraints);
  auto present = window_values(window).present;
  std::sort(present.begin(), present.end());
  auto [timeliness, skewness] = score_dynamic(present, ref);
  q[Dimension::kTimeliness] = timeliness;
  q[Dimension::kSkewness] = skewness;
  return q;
}

/// As score_all, but windows without present values get the sentinel vector.
template <ValueDetector Detector>
QualityVector score_all_or_sentinel(const DataWindow& window, const Detector& detector,
                                    const IntegrityConstraints& constraints, const DynamicReference& ref) {
  const bool any_present =
      std::any_of(window.readings.begin(), window.readings.end(), [](const Reading& r) { return r.value.has_value(); });
  if (!any_present) return all_missing_sentinel();
  return score_all(window, detector, constraints, ref);
}

}  // namespace adq

#endif  // ADQ_DIMENSIONS_HPP_
