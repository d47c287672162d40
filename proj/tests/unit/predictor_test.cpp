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

#include <gtest/gtest.h>

#include "adq/predictor.hpp"
#include "support.hpp"

namespace adq {
namespace {

using testing::make_window;

double feat(const FeatureVector& f, Feature k) { return f[static_cast<std::size_t>(k)]; }

FeatureVector row(double a, double b = 0) {
  FeatureVector f{};
  f[0] = a;
  f[1] = b;
  return f;
}

std::vector<FeatureVector> random_features(CounterRng& rng, std::size_t n) {
  std::vector<FeatureVector> x(n);
  for (auto& f : x)
    for (auto& v : f) v = std::round(rng.normal() * 8) / 4;
  return x;
}

double sse(const GbtModel& m, std::span<const FeatureVector> x, std::span<const double> y) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::pow(y[i] - predict(m, x[i]), 2);
  return s;
}

TEST(Features, ConstantWindow) {
  auto f = extract_features(make_window(0, std::vector<double>{5, 5, 5, 5}), {0, 150});
  EXPECT_EQ(feat(f, Feature::kMean), 5.0);
  EXPECT_EQ(feat(f, Feature::kStd), 0.0);
  EXPECT_EQ(feat(f, Feature::kLag1Autocorr), 0.0);
  EXPECT_EQ(feat(f, Feature::kMin), 5.0);
  EXPECT_EQ(feat(f, Feature::kQ75), 5.0);
}

TEST(Features, CountsMissing) {
  auto f = extract_features(make_window(0, {1.0, std::nullopt, 3.0}), {0, 150});
  EXPECT_DOUBLE_EQ(feat(f, Feature::kMissingFraction), 1.0 / 3.0);
  EXPECT_EQ(feat(f, Feature::kNumPresent), 2.0);
  EXPECT_EQ(feat(f, Feature::kMedian), 2.0);
  EXPECT_EQ(feat(f, Feature::kLag1Autocorr), -0.5);
}

TEST(Features, QuantilesAndRange) {
  auto f = extract_features(make_window(0, std::vector<double>{4, 1, 3, 2, 200}), {0, 150});
  EXPECT_EQ(feat(f, Feature::kMin), 1.0);
  EXPECT_EQ(feat(f, Feature::kMax), 200.0);
  EXPECT_EQ(feat(f, Feature::kMedian), 3.0);
  EXPECT_EQ(feat(f, Feature::kQ25), 2.0);
  EXPECT_EQ(feat(f, Feature::kQ75), 4.0);
  EXPECT_DOUBLE_EQ(feat(f, Feature::kOutOfRangeFraction), 0.2);
}

TEST(Features, AllMissingSentinel) {
  auto f = extract_features(make_window(0, {std::nullopt, std::nullopt}), {0, 150});
  EXPECT_EQ(feat(f, Feature::kMissingFraction), 1.0);
  EXPECT_EQ(feat(f, Feature::kMean), 0.0);
  EXPECT_EQ(feat(f, Feature::kNumPresent), 0.0);
}

TEST(Features, Deterministic) {
  auto w = testing::random_window(1, 3);
  EXPECT_EQ(extract_features(w, {0, 150}), extract_features(w, {0, 150}));
}

TEST(Gbt, ConstantTargets) {
  CounterRng rng(1, 0);
  auto x = random_features(rng, 30);
  std::vector<double> y(30, 0.1);
  auto m = fit_gbt(x, y, {}, 1);
  for (const auto& t : m.trees) EXPECT_EQ(t.nodes.size(), 1u);
  EXPECT_NEAR(predict(m, row(123, -4)), 0.1, 1e-15);
}

TEST(Gbt, StepFunction) {
  std::vector<FeatureVector> x;
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(row(i));
    y.push_back(i < 17 ? -1.0 : 2.5);
  }
  auto m = fit_gbt(x, y, {50, 1, 0.3, 3}, 0);
  std::vector<double> pred;
  for (const auto& f : x) pred.push_back(predict(m, f));
  EXPECT_LT(mae(y, pred), 1e-3);
  // The first stump splits at the midpoint between 16 and 17.
  EXPECT_EQ(m.trees[0].nodes[0].feature_index, 0);
  EXPECT_EQ(m.trees[0].nodes[0].threshold, 16.5);
}

TEST(Gbt, TieBreaksOnLowestFeature) {
  // Features 0 and 1 carry identical information.
  std::vector<FeatureVector> x;
  std::vector<double> y;
  for (int i = 0; i < 10; ++i) {
    x.push_back(row(i, i));
    y.push_back(i < 5 ? 0 : 1);
  }
  auto m = fit_gbt(x, y, {1, 1, 1.0, 1}, 0);
  EXPECT_EQ(m.trees[0].nodes[0].feature_index, 0);
}

TEST(Gbt, ZeroTreeModel) {
  std::vector<FeatureVector> x = {row(1), row(2)};
  std::vector<double> y = {1, 3};
  auto m = fit_gbt(x, y, {0, 3, 0.1, 1}, 0);
  EXPECT_TRUE(m.trees.empty());
  EXPECT_EQ(predict(m, row(9)), 2.0);
}

TEST(Gbt, OverfitInterpolatesTrainingRows) {
  CounterRng rng(2, 0);
  auto x = random_features(rng, 20);
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) y.push_back(rng.normal());
  auto m = fit_gbt(x, y, {300, 8, 0.5, 1}, 0);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(predict(m, x[i]), y[i], 1e-6);
}

TEST(Gbt, Errors) {
  std::vector<FeatureVector> one = {row(1)};
  EXPECT_THROW(fit_gbt(one, std::vector<double>{1}, {}, 0), FitError);
  std::vector<FeatureVector> two = {row(1), row(std::nan(""))};
  EXPECT_THROW(fit_gbt(two, std::vector<double>{1, 2}, {}, 0), FitError);
  EXPECT_THROW(fit_gbt(two, std::vector<double>{1}, {}, 0), FitError);
}

TEST(Gbt, TrainingLossNeverIncreasesWithTrees) {
  CounterRng rng(3, 0);
  for (int t = 0; t < 10; ++t) {
    auto x = random_features(rng, 60);
    std::vector<double> y;
    for (const auto& f : x) y.push_back(std::sin(f[0]) + f[1] * f[2] + 0.1 * rng.normal());
    const double eta = 0.05 + 0.19 * t;
    auto full = fit_gbt(x, y, {40, 3, std::min(eta, 1.0), 2}, 0);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= full.trees.size(); ++k) {
      GbtModel prefix = full;
      prefix.trees.resize(k);
      const double loss = sse(prefix, x, y);
      EXPECT_LE(loss, prev * (1 + 1e-12) + 1e-300);
      prev = loss;
    }
  }
}

TEST(Gbt, ConstantShiftOfTargets) {
  CounterRng rng(4, 0);
  for (int t = 0; t < 5; ++t) {
    // Dyadic targets keep the initial residuals bit-identical, so both fits
    // choose the same splits; leaf values agree up to rounding.
    std::vector<FeatureVector> x(32);
    std::vector<double> y(32), y_shift(32);
    for (std::size_t i = 0; i < 32; ++i) {
      for (auto& v : x[i]) v = static_cast<double>(rng.below(16));
      y[i] = static_cast<double>(rng.below(64)) / 8;
      y_shift[i] = y[i] + 4.0;
    }
    auto a = fit_gbt(x, y, {10, 3, 0.5, 2}, 9);
    auto b = fit_gbt(x, y_shift, {10, 3, 0.5, 2}, 9);
    EXPECT_EQ(b.base_score, a.base_score + 4.0);
    ASSERT_EQ(a.trees.size(), b.trees.size());
    for (std::size_t k = 0; k < a.trees.size(); ++k) {
      const auto& na = a.trees[k].nodes;
      const auto& nb = b.trees[k].nodes;
      ASSERT_EQ(na.size(), nb.size());
      for (std::size_t i = 0; i < na.size(); ++i) {
        EXPECT_EQ(na[i].feature_index, nb[i].feature_index);
        EXPECT_EQ(na[i].threshold, nb[i].threshold);
        EXPECT_NEAR(na[i].leaf_value, nb[i].leaf_value, 1e-12);
      }
    }
    for (const auto& f : x) EXPECT_NEAR(predict(b, f), predict(a, f) + 4.0, 1e-12);
  }
}

TEST(Gbt, DeterministicSerialization) {
  CounterRng rng(5, 0);
  auto x = random_features(rng, 50);
  std::vector<double> y;
  for (const auto& f : x) y.push_back(f[3] - f[7]);
  nlohmann::json a = fit_gbt(x, y, {}, 77);
  nlohmann::json b = fit_gbt(x, y, {}, 77);
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(a["training_fingerprint"].get<std::string>().size(), 16u);
}

TEST(Gbt, JsonRoundTripPredictsIdentically) {
  CounterRng rng(6, 0);
  auto x = random_features(rng, 80);
  std::vector<double> y;
  for (const auto& f : x) y.push_back(f[0] * 0.3 + std::cos(f[5]));
  auto m = fit_gbt(x, y, {}, 3);
  nlohmann::json j = m;
  auto back = nlohmann::json::parse(j.dump()).get<GbtModel>();
  EXPECT_EQ(back, m);
  for (int i = 0; i < 1000; ++i) {
    FeatureVector f{};
    for (auto& v : f) v = rng.normal() * 10;
    EXPECT_EQ(predict(back, f), predict(m, f));
  }
}

TEST(Metrics, Examples) {
  std::vector<double> y = {1, 2, 3};
  EXPECT_EQ(mae(y, y), 0.0);
  EXPECT_EQ(mae(std::vector<double>{0, 1}, std::vector<double>{1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(mae(y, std::vector<double>{2, 2, 2}), 2.0 / 3.0);
  EXPECT_EQ(r2(y, y), 1.0);
  EXPECT_EQ(r2(y, std::vector<double>{2, 2, 2}), 0.0);
  EXPECT_DOUBLE_EQ(r2(y, std::vector<double>{1, 2, 4}), 0.5);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(mae(std::vector<double>{1}, std::vector<double>{1, 2}), MetricError);
  EXPECT_THROW(mae({}, {}), MetricError);
  EXPECT_THROW(r2(std::vector<double>{1}, std::vector<double>{1}), MetricError);
  EXPECT_THROW(r2(std::vector<double>{2, 2}, std::vector<double>{1, 2}), MetricError);
}

TEST(Metrics, MatchBruteForce) {
  CounterRng rng(7, 0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> y(2 + rng.below(100)), p(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = rng.normal() * 3;
      p[i] = y[i] + rng.normal();
    }
    EXPECT_NEAR(mae(y, p), testing::brute_mae(y, p), 1e-12);
    EXPECT_NEAR(r2(y, p), testing::brute_r2(y, p), 1e-12);
  }
}

TEST(OracleCheck, Examples) {
  std::vector<double> y = {0, 1, 2, 3};
  EXPECT_TRUE(oracle_check(y, y, {OracleMetric::kMae, 0.2}).pass);
  std::vector<double> off = {0.5, 1.5, 2.5, 3.5};
  auto fail = oracle_check(y, off, {OracleMetric::kMae, 0.2});
  EXPECT_FALSE(fail.pass);
  EXPECT_DOUBLE_EQ(*fail.mae, 0.5);
  // R^2 = 1 - 0.2/20 = 0.99 here; pass at 0.9.
  std::vector<double> y2 = {0, 2, 4, 6, 8};
  std::vector<double> p2 = {0.2, 2.2, 3.8, 6.2, 7.8};
  auto r = oracle_check(y2, p2, {OracleMetric::kR2, 0.9});
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.n, 5u);
}

TEST(OracleCheck, MetricErrorIsFailWithReason) {
  std::vector<double> y = {1, 1};
  auto r = oracle_check(y, y, {OracleMetric::kR2, 0.9});
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.reason.empty());
}

}  // namespace
}  // namespace adq
