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

#ifndef ADQ_PREDICTOR_HPP_
#define ADQ_PREDICTOR_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adq/common.hpp"
#include "adq/dimensions.hpp"
#include "adq/windowing.hpp"
#include "json.hpp"

namespace adq {

inline constexpr std::size_t kNumFeatures = 11;

enum class Feature : std::size_t {
  kMean,
  kStd,
  kMin,
  kMax,
  kMedian,
  kQ25,
  kQ75,
  kMissingFraction,
  kOutOfRangeFraction,
  kLag1Autocorr,
  kNumPresent,
};

using FeatureVector = std::array<double, kNumFeatures>;

namespace detail {

// Linear interpolation between order statistics (R type 7).
inline double sorted_quantile(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace detail

/// Cheap summary statistics of a window. Deliberately avoids anything the
/// standard path computes against the reference (KS, JSD).
inline FeatureVector extract_features(const DataWindow& window, const IntegrityConstraints& constraints) {
  FeatureVector f{};
  const double n_total = static_cast<double>(std::max<std::size_t>(window.size(), 1));
  std::vector<double> present;
  present.reserve(window.size());
  std::size_t out_of_range = 0;
  for (const auto& r : window.readings) {
    if (!r.value) continue;
    present.push_back(*r.value);
    if (!constraints.contains(*r.value)) ++out_of_range;
  }
  auto at = [&f](Feature k) -> double& { return f[static_cast<std::size_t>(k)]; };
  at(Feature::kMissingFraction) = static_cast<double>(window.size() - present.size()) / n_total;
  if (window.size() == 0) at(Feature::kMissingFraction) = 1.0;
  at(Feature::kOutOfRangeFraction) = static_cast<double>(out_of_range) / n_total;
  at(Feature::kNumPresent) = static_cast<double>(present.size());
  if (present.empty()) return f;

  const double n = static_cast<double>(present.size());
  const double mean = std::accumulate(present.begin(), present.end(), 0.0) / n;
  double ss = 0.0;
  double lag = 0.0;
  for (std::size_t i = 0; i < present.size(); ++i) {
    const double d = present[i] - mean;
    ss += d * d;
    if (i + 1 < present.size()) lag += d * (present[i + 1] - mean);
  }
  at(Feature::kMean) = mean;
  at(Feature::kStd) = std::sqrt(ss / n);
  at(Feature::kLag1Autocorr) = (present.size() >= 2 && ss > 0.0) ? lag / ss : 0.0;

  std::sort(present.begin(), present.end());
  at(Feature::kMin) = present.front();
  at(Feature::kMax) = present.back();
  at(Feature::kMedian) = detail::sorted_quantile(present, 0.5);
  at(Feature::kQ25) = detail::sorted_quantile(present, 0.25);
  at(Feature::kQ75) = detail::sorted_quantile(present, 0.75);
  return f;
}

struct GbtHyperparams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 4;
  double learning_rate = 0.1;
  std::size_t min_samples_leaf = 3;

  friend bool operator==(const GbtHyperparams&, const GbtHyperparams&) = default;
};

/// Flat binary regression tree. Node 0 is the root; a node with
/// `feature_index < 0` is a leaf.
struct RegressionTree {
  struct Node {
    std::int32_t feature_index = -1;
    double threshold = 0.0;  // go left when x[feature] <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double leaf_value = 0.0;

    friend bool operator==(const Node&, const Node&) = default;
  };

  std::vector<Node> nodes;

  double evaluate(const FeatureVector& x) const {
    std::size_t i = 0;
    while (nodes[i].feature_index >= 0) {
      const auto& node = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature_index)] <= node.threshold ? node.left
                                                                                                     : node.right);
    }
    return nodes[i].leaf_value;
  }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct GbtModel {
  double base_score = 0.0;
  std::vector<RegressionTree> trees;
  GbtHyperparams hyperparams;
  std::uint64_t seed = 0;
  std::uint64_t version = 0;
  std::string training_fingerprint;

  friend bool operator==(const GbtModel&, const GbtModel&) = default;
};

/// base_score + learning_rate * sum of tree outputs.
inline double predict(const GbtModel& model, const FeatureVector& f) {
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += tree.evaluate(f);
  return model.base_score + model.hyperparams.learning_rate * sum;
}

namespace detail {

// FNV-1a over the raw bytes of the training data.
inline std::string fingerprint(std::span<const FeatureVector> x, std::span<const double> y) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  feed(x.data(), x.size_bytes());
  feed(y.data(), y.size_bytes());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

/*
 * Exact greedy tree builder over pre-sorted feature columns. Each node owns,
 * per feature, the sample indices sorted by that feature; a split partitions
 * every list stably so children stay sorted without re-sorting.
 */
class TreeBuilder {
 public:
  TreeBuilder(std::span<const FeatureVector> x, const GbtHyperparams& hp,
              const std::array<std::vector<std::uint32_t>, kNumFeatures>& presorted)
      : x_(x), hp_(hp), presorted_(presorted), side_(x.size(), 0) {}

  RegressionTree build(std::span<const double> residuals) {
    residuals_ = residuals;
    RegressionTree tree;
    std::array<std::vector<std::uint32_t>, kNumFeatures> lists = presorted_;
    grow(tree, lists, 0);
    return tree;
  }

 private:
  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
  };

  std::int32_t grow(RegressionTree& tree, std::array<std::vector<std::uint32_t>, kNumFeatures>& lists,
                    std::size_t depth) {
    const auto& members = lists[0];
    const auto node_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    double sum = 0.0;
    for (auto i : members) sum += residuals_[i];
    const double count = static_cast<double>(members.size());
    tree.nodes[static_cast<std::size_t>(node_id)].leaf_value = sum / count;

    if (depth >= hp_.max_depth || members.size() < 2 * hp_.min_samples_leaf) return node_id;
    const auto split = best_split(lists, sum);
    if (!split) return node_id;

    for (auto i : lists[split->feature]) side_[i] = x_[i][split->feature] <= split->threshold ? 1 : 2;
    std::array<std::vector<std::uint32_t>, kNumFeatures> left;
    std::array<std::vector<std::uint32_t>, kNumFeatures> right;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      for (auto i : lists[f]) (side_[i] == 1 ? left[f] : right[f]).push_back(i);
      std::vector<std::uint32_t>().swap(lists[f]);
    }
    auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.feature_index = static_cast<std::int32_t>(split->feature);
    node.threshold = split->threshold;
    node.leaf_value = 0.0;
    const auto l = grow(tree, left, depth + 1);
    const auto r = grow(tree, right, depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].left = l;
    tree.nodes[static_cast<std::size_t>(node_id)].right = r;
    return node_id;
  }

  // Variance-reduction gain: SL^2/nL + SR^2/nR - S^2/n. Ties keep the
  // earliest (lowest feature, then lowest threshold) candidate.
  std::optional<Split> best_split(const std::array<std::vector<std::uint32_t>, kNumFeatures>& lists,
                                  double total) const {
    const std::size_t n = lists[0].size();
    const double parent = total * total / static_cast<double>(n);
    // Gains below this are rounding noise on the residual scale.
    double scale = 0.0;
    for (auto i : lists[0]) scale += residuals_[i] * residuals_[i];
    const double min_gain = 1e-12 * std::max(scale, 1e-300);

    std::optional<Split> best;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      const auto& order = lists[f];
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left_sum += residuals_[order[k]];
        const std::size_t n_left = k + 1;
        const double v = x_[order[k]][f];
        const double v_next = x_[order[k + 1]][f];
        if (!(v < v_next)) continue;
        if (n_left < hp_.min_samples_leaf || n - n_left < hp_.min_samples_leaf) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                            right_sum * right_sum / static_cast<double>(n - n_left) - parent;
        if (gain > min_gain && (!best || gain > best->gain)) {
          best = Split{f, v + (v_next - v) * 0.5, gain};
        }
      }
    }
    return best;
  }

  std::span<const FeatureVector> x_;
  const GbtHyperparams& hp_;
  const std::array<std::vector<std::uint32_t>, kNumFeatures>& presorted_;
  std::span<const double> residuals_;
  std::vector<std::uint8_t> side_;
};

}  // namespace detail

/// Squared-error gradient boosting: each tree fits the residuals of the
/// ensemble so far with exact greedy splits. No subsampling, so `seed` only
/// travels with the model.
inline GbtModel fit_gbt(std::span<const FeatureVector> x, std::span<const double> y, const GbtHyperparams& hp,
                        std::uint64_t seed = 0) {
  if (x.size() != y.size()) throw FitError("fit_gbt: feature and target counts differ");
  if (x.size() < 2) throw FitError("fit_gbt: need at least 2 samples");
  if (!(hp.learning_rate > 0.0)) throw FitError("fit_gbt: learning_rate must be positive");
  if (hp.min_samples_leaf == 0) throw FitError("fit_gbt: min_samples_leaf must be at least 1");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(y[i])) throw FitError("fit_gbt: non-finite target at row " + std::to_string(i));
    for (double v : x[i]) {
      if (!std::isfinite(v)) throw FitError("fit_gbt: non-finite feature at row " + std::to_string(i));
    }
  }

  GbtModel model;
  model.hyperparams = hp;
  model.seed = seed;
  model.training_fingerprint = detail::fingerprint(x, y);
  model.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

  std::array<std::vector<std::uint32_t>, kNumFeatures> presorted;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    auto& order = presorted[f];
    order.resize(x.size());
    std::iota(order.begin(), order.end(), 0U);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return x[a][f] < x[b][f]; });
  }

  std::vector<double> current(y.size(), model.base_score);
  std::vector<double> residuals(y.size());
  detail::TreeBuilder builder(x, hp, presorted);
  model.trees.reserve(hp.n_trees);
  for (std::size_t m = 0; m < hp.n_trees; ++m) {
    for (std::size_t i = 0; i < y.size(); ++i) residuals[i] = y[i] - current[i];
    model.trees.push_back(builder.build(residuals));
    const auto& tree = model.trees.back();
    for (std::size_t i = 0; i < y.size(); ++i) current[i] += hp.learning_rate * tree.evaluate(x[i]);
  }
  return model;
}

inline double mae(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw MetricError("mae: length mismatch");
  if (y.empty()) throw MetricError("mae: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
  return s / static_cast<double>(y.size());
}

inline double r2(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw MetricError("r2: length mismatch");
  if (y.size() < 2) throw MetricError("r2: need at least 2 values");
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot <= 0.0) throw MetricError("r2: target has zero variance");
  return 1.0 - ss_res / ss_tot;
}

enum class OracleMetric { kMae, kR2 };

/// Pass condition: MAE <= threshold, or R^2 >= threshold.
struct OracleTolerance {
  OracleMetric metric = OracleMetric::kMae;
  double threshold = 0.5;

  friend bool operator==(const OracleTolerance&, const OracleTolerance&) = default;
};

struct OracleReport {
  std::optional<double> mae;
  std::optional<double> r2;
  std::size_t n = 0;
  bool pass = false;
  std::string reason;  // set when the chosen metric could not be computed
};

inline OracleReport oracle_check(std::span<const double> y, std::span<const double> yhat, const OracleTolerance& tol) {
  OracleReport report;
  report.n = y.size();
  try {
    if (tol.metric == OracleMetric::kMae) {
      report.mae = mae(y, yhat);
      report.pass = *report.mae <= tol.threshold;
    } else {
      report.r2 = r2(y, yhat);
      report.pass = *report.r2 >= tol.threshold;
    }
  } catch (const MetricError& e) {
    report.pass = false;
    report.reason = e.what();
  }
  return report;
}

inline void to_json(nlohmann::json& j, const GbtHyperparams& hp) {
  j = {{"n_trees", hp.n_trees},
       {"max_depth", hp.max_depth},
       {"learning_rate", hp.learning_rate},
       {"min_samples_leaf", hp.min_samples_leaf}};
}

inline void from_json(const nlohmann::json& j, GbtHyperparams& hp) {
  j.at("n_trees").get_to(hp.n_trees);
  j.at("max_depth").get_to(hp.max_depth);
  j.at("learning_rate").get_to(hp.learning_rate);
  j.at("min_samples_leaf").get_to(hp.min_samples_leaf);
}

inline void to_json(nlohmann::json& j, const GbtModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({{"feature_index", n.feature_index},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"leaf_value", n.leaf_value}});
    }
    trees.push_back(std::move(nodes));
  }
  j = {{"format_version", 1},
       {"version", m.version},
       {"base_score", m.base_score},
       {"hyperparams", m.hyperparams},
       {"seed", m.seed},
       {"training_fingerprint", m.training_fingerprint},
       {"trees", std::move(trees)}};
}

inline void from_json(const nlohmann::json& j, GbtModel& m) {
  j.at("version").get_to(m.version);
  j.at("base_score").get_to(m.base_score);
  j.at("hyperparams").get_to(m.hyperparams);
  j.at("seed").get_to(m.seed);
  j.at("training_fingerprint").get_to(m.training_fingerprint);
  m.trees.clear();
  for (const auto& jt : j.at("trees")) {
    RegressionTree t;
    for (const auto& jn : jt) {
      RegressionTree::Node n;
      jn.at("feature_index").get_to(n.feature_index);
      jn.at("threshold").get_to(n.threshold);
      jn.at("left").get_to(n.left);
      jn.at("right").get_to(n.right);
      jn.at("leaf_value").get_to(n.leaf_value);
      t.nodes.push_back(n);
    }
    if (t.nodes.empty()) throw StoreError("model.json: tree without nodes");
    m.trees.push_back(std::move(t));
  }
}

}  // namespace adq

#endif  // ADQ_PREDICTOR_HPP_
