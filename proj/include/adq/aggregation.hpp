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

#ifndef ADQ_AGGREGATION_HPP_
#define ADQ_AGGREGATION_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "adq/common.hpp"
#include "adq/dimensions.hpp"
#include "json.hpp"

namespace adq {

using DimVector = std::array<double, kNumDimensions>;
using DimMatrix = std::array<DimVector, kNumDimensions>;

/// Per-dimension z-score parameters (population statistics).
struct Standardizer {
  DimVector means{};
  DimVector stds{};

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

/// First principal component of the standardized quality matrix.
struct PcaModel {
  DimVector loadings{};
  double explained_variance_ratio = 0.0;
  DimVector eigenvalues{};  // descending
  bool degenerate = false;  // top two eigenvalues within 1e-6 relative

  friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

inline Standardizer fit_standardizer(std::span<const QualityVector> rows) {
  if (rows.size() < 2) throw FitError("fit_standardizer: need at least 2 rows");
  Standardizer s;
  const double n = static_cast<double>(rows.size());
  for (std::size_t c = 0; c < kNumDimensions; ++c) {
    const double first = rows.front().values[c];
    const bool constant =
        std::all_of(rows.begin(), rows.end(), [&](const QualityVector& r) { return r.values[c] == first; });
    if (constant) {
      // Summation rounding would otherwise leave a tiny spurious spread.
      s.means[c] = first;
      s.stds[c] = 0.0;
      continue;
    }
    double sum = 0.0;
    for (const auto& r : rows) sum += r.values[c];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : rows) {
      const double d = r.values[c] - mean;
      ss += d * d;
    }
    s.means[c] = mean;
    s.stds[c] = std::sqrt(ss / n);
  }
  return s;
}

/// z-scores; a zero-variance dimension maps to 0.
inline DimVector standardize(const QualityVector& v, const Standardizer& s) {
  DimVector z{};
  for (std::size_t c = 0; c < kNumDimensions; ++c) {
    z[c] = s.stds[c] > 0.0 ? (v.values[c] - s.means[c]) / s.stds[c] : 0.0;
  }
  return z;
}

namespace detail {

struct SymmetricEigen {
  DimVector values{};
  DimMatrix vectors{};  // vectors[k] is the k-th eigenvector
};

// Cyclic Jacobi rotations for a small symmetric matrix. Eigenpairs are
// returned sorted by descending eigenvalue.
inline SymmetricEigen jacobi_eigen(DimMatrix a, int max_sweeps = 100) {
  constexpr std::size_t n = kNumDimensions;
  DimMatrix v{};
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

  double scale = 0.0;
  for (const auto& row : a)
    for (double x : row) scale += x * x;

  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off <= 1e-30 * scale || off == 0.0) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p];
          const double vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) throw FitError("fit_pca: eigen-solver did not converge");

  std::array<std::size_t, n> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return a[l][l] > a[r][r]; });
  SymmetricEigen out;
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a[order[k]][order[k]];
    for (std::size_t i = 0; i < n; ++i) out.vectors[k][i] = v[i][order[k]];
  }
  return out;
}

// Sign rule: skewness loading <= 0. When it is zero, fall back to the other
// defect dimensions (<= 0) and finally consistency (>= 0).
inline void apply_sign_convention(DimVector& loadings) {
  constexpr double kZero = 1e-12;
  constexpr std::array<std::pair<Dimension, double>, kNumDimensions> anchors = {{
      {Dimension::kSkewness, -1.0},
      {Dimension::kTimeliness, -1.0},
      {Dimension::kAccuracy, -1.0},
      {Dimension::kCompleteness, -1.0},
      {Dimension::kConsistency, 1.0},
  }};
  for (auto [dim, want] : anchors) {
    const double x = loadings[static_cast<std::size_t>(dim)];
    if (std::abs(x) <= kZero) continue;
    if (x * want < 0.0)
      for (auto& l : loadings) l = -l;
    return;
  }
}

}  // namespace detail

/// Population covariance of the rows.
inline DimMatrix covariance(std::span<const DimVector> rows) {
  const double n = static_cast<double>(rows.size());
  DimVector mean{};
  for (const auto& r : rows)
    for (std::size_t c = 0; c < kNumDimensions; ++c) mean[c] += r[c];
  for (auto& m : mean) m /= n;
  DimMatrix cov{};
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < kNumDimensions; ++i) {
      const double di = r[i] - mean[i];
      for (std::size_t j = i; j < kNumDimensions; ++j) cov[i][j] += di * (r[j] - mean[j]);
    }
  }
  for (std::size_t i = 0; i < kNumDimensions; ++i) {
    for (std::size_t j = i; j < kNumDimensions; ++j) {
      cov[i][j] /= n;
      cov[j][i] = cov[i][j];
    }
  }
  return cov;
}

inline PcaModel fit_pca(std::span<const DimVector> standardized) {
  if (standardized.size() < 2) throw FitError("fit_pca: need at least 2 rows");
  const auto eig = detail::jacobi_eigen(covariance(standardized));
  PcaModel model;
  for (std::size_t k = 0; k < kNumDimensions; ++k) model.eigenvalues[k] = std::max(0.0, eig.values[k]);
  const double total = std::accumulate(model.eigenvalues.begin(), model.eigenvalues.end(), 0.0);
  const double top = model.eigenvalues[0];
  if (top <= 0.0 || total <= 0.0) {
    // Every dimension is constant: no direction carries variance.
    model.loadings = {0.0, 0.0, 0.0, 0.0, -1.0};
    model.explained_variance_ratio = 0.0;
    model.degenerate = true;
    return model;
  }
  model.loadings = eig.vectors[0];
  double norm = 0.0;
  for (double l : model.loadings) norm += l * l;
  norm = std::sqrt(norm);
  for (auto& l : model.loadings) l /= norm;
  detail::apply_sign_convention(model.loadings);
  model.explained_variance_ratio = top / total;
  model.degenerate = (top - model.eigenvalues[1]) / top < 1e-6;
  return model;
}

inline double project_score(const DimVector& z, const PcaModel& pca) {
  double s = 0.0;
  for (std::size_t c = 0; c < kNumDimensions; ++c) s += pca.loadings[c] * z[c];
  return s;
}

/// Fitted aggregation: raw quality vector to unified score.
struct Aggregator {
  Standardizer standardizer;
  PcaModel pca;

  double score(const QualityVector& q) const { return project_score(standardize(q, standardizer), pca); }

  friend bool operator==(const Aggregator&, const Aggregator&) = default;
};

inline Aggregator fit_aggregator(std::span<const QualityVector> rows) {
  Aggregator agg;
  agg.standardizer = fit_standardizer(rows);
  std::vector<DimVector> z;
  z.reserve(rows.size());
  for (const auto& r : rows) z.push_back(standardize(r, agg.standardizer));
  agg.pca = fit_pca(z);
  return agg;
}

/// Everything the standard (slow) scoring path reads.
struct StandardArtifacts {
  AnomalyDetector anomaly;
  IntegrityConstraints constraints;
  DynamicReference reference;
  Aggregator aggregator;
  friend bool operator==(const StandardArtifacts&, const StandardArtifacts&) = default;
};

struct StandardScore {
  QualityVector quality;
  double unified = 0.0;
  bool sentinel = false;  // the window had no present values
};

inline StandardScore score_window_standard(const DataWindow& window, const StandardArtifacts& art) {
  StandardScore out;
  const bool any_present =
      std::any_of(window.readings.begin(), window.readings.end(), [](const Reading& r) { return r.value.has_value(); });
  out.sentinel = !any_present;
  out.quality = any_present ? score_all(window, art.anomaly, art.constraints, art.reference) : all_missing_sentinel();
  out.unified = art.aggregator.score(out.quality);
  return out;
}

inline void to_json(nlohmann::json& j, const Standardizer& s) {
  j = {{"format_version", 1}, {"means", s.means}, {"stds", s.stds}};
}

inline void from_json(const nlohmann::json& j, Standardizer& s) {
  j.at("means").get_to(s.means);
  j.at("stds").get_to(s.stds);
}

inline void to_json(nlohmann::json& j, const PcaModel& p) {
  j = {{"format_version", 1},
       {"loadings", p.loadings},
       {"explained_variance_ratio", p.explained_variance_ratio},
       {"eigenvalues", p.eigenvalues},
       {"degenerate", p.degenerate}};
}

inline void from_json(const nlohmann::json& j, PcaModel& p) {
  j.at("loadings").get_to(p.loadings);
  j.at("explained_variance_ratio").get_to(p.explained_variance_ratio);
  j.at("eigenvalues").get_to(p.eigenvalues);
  j.at("degenerate").get_to(p.degenerate);
}

}  // namespace adq

#endif  // ADQ_AGGREGATION_HPP_
