#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "gtest/gtest.h"

#include "cascadecl/error.hpp"
#include "cascadecl/metrics.hpp"
#include "oracles.hpp"

using namespace cascadecl;

TEST(Metrics, HandCountedConfusion) {
  const auto m = metrics_from_confusion(Confusion{3, 1, 2, 4});
  EXPECT_NEAR(0.7, m.accuracy, 1e-12);
  EXPECT_NEAR(0.708333, m.precision, 1e-6);
  EXPECT_NEAR(0.7, m.recall, 1e-12);
  EXPECT_NEAR(0.69697, m.f1, 1e-5);
}

TEST(Metrics, MatchesOracleOnRandomVectors) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 60)(rng);
    std::vector<std::size_t> pred(n), label(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng() % 2;
      label[i] = rng() % 2;
    }
    const auto m = compute_metrics(pred, label);
    const auto o = oracle::macro(oracle::count(pred, label));
    EXPECT_NEAR(o[0], m.accuracy, 1e-12);
    EXPECT_NEAR(o[1], m.precision, 1e-12);
    EXPECT_NEAR(o[2], m.recall, 1e-12);
    EXPECT_NEAR(o[3], m.f1, 1e-12);
  }
}

TEST(Metrics, SingleClassAndConstantPredictor) {
  const std::vector<std::size_t> ones(6, 1);
  const auto perfect = compute_metrics(ones, ones);
  EXPECT_EQ(1.0, perfect.accuracy);
  EXPECT_EQ(0.5, perfect.precision);
  EXPECT_EQ(0.5, perfect.f1);

  const std::vector<std::size_t> label{0, 0, 0, 1, 1, 1, 1, 1};
  const std::vector<std::size_t> constant(8, 1);
  const auto m = compute_metrics(constant, label);
  EXPECT_NEAR(5.0 / 8.0, m.accuracy, 1e-12);
  EXPECT_NEAR(0.5, m.recall, 1e-12);
  EXPECT_NEAR(5.0 / 16.0, m.precision, 1e-12);
}

TEST(Metrics, SwappingClassesKeepsMacroScores) {
  std::mt19937_64 rng(32);
  std::vector<std::size_t> pred(40), label(40);
  for (std::size_t i = 0; i < 40; ++i) {
    pred[i] = rng() % 2;
    label[i] = rng() % 2;
  }
  auto flip = [](std::vector<std::size_t> v) {
    for (auto& x : v) x = 1 - x;
    return v;
  };
  const auto a = compute_metrics(pred, label), b = compute_metrics(flip(pred), flip(label));
  EXPECT_NEAR(a.accuracy, b.accuracy, 1e-12);
  EXPECT_NEAR(a.precision, b.precision, 1e-12);
  EXPECT_NEAR(a.recall, b.recall, 1e-12);
  EXPECT_NEAR(a.f1, b.f1, 1e-12);
}

TEST(Metrics, EmptyInput) {
  try {
    compute_metrics({}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::EmptyInput, e.code());
  }
  const std::vector<std::size_t> a{1, 0}, b{1};
  EXPECT_THROW(compute_metrics(a, b), Error);
}

TEST(StratifiedSplit, SizesAndProportions) {
  std::vector<std::size_t> labels(100, 0);
  std::fill(labels.begin(), labels.begin() + 30, 1);
  const auto s = stratified_split(labels, 0.75, 4);
  EXPECT_EQ(75u, s.train.size());
  EXPECT_EQ(25u, s.test.size());
  std::size_t fake = 0;
  for (auto i : s.train) fake += labels[i];
  EXPECT_TRUE(fake == 22 || fake == 23) << fake;
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(100u, all.size());
}

TEST(StratifiedSplit, OddCountRoundsTrainUp) {
  const std::vector<std::size_t> labels{0, 1, 0, 1, 0, 1, 0};
  EXPECT_EQ(6u, stratified_split(labels, 0.75, 1).train.size());
}

TEST(StratifiedSplit, SeededAndTooSmall) {
  std::vector<std::size_t> labels(40);
  for (std::size_t i = 0; i < 40; ++i) labels[i] = i % 2;
  const auto a = stratified_split(labels, 0.75, 8), b = stratified_split(labels, 0.75, 8);
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(a.train, stratified_split(labels, 0.75, 9).train);
  try {
    stratified_split(std::vector<std::size_t>{1}, 0.75, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::TooSmall, e.code());
  }
}
