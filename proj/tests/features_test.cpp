#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gtest/gtest.h"

#include "cascadecl/error.hpp"
#include "cascadecl/features.hpp"
#include "oracles.hpp"

using namespace cascadecl;

namespace {

TimelineMap chain(std::size_t len) {
  TimelineMap t;
  for (std::size_t i = 0; i < len; ++i) {
    Timeline tl;
    tl.tweet_count = 20;
    if (i + 1 < len) tl.mentions.push_back({"u" + std::to_string(i + 1)});
    t["u" + std::to_string(i)] = tl;
  }
  return t;
}

}  // namespace

TEST(ProfileFeatures, ExampleUser) {
  UserProfile u;
  u.user_id = "u";
  u.verified = true;
  u.created_months = 120;
  u.followers = 5000;
  u.friends = 300;
  u.lists = 10;
  u.favourites = 42;
  u.statuses = 9000;
  TweetRecord t;
  t.tweet_id = "t";
  t.timestamp_s = 1090;
  const auto f = profile_features(u, t, 1000);
  EXPECT_EQ((ProfileFeatures{1, 120, 5000, 300, 10, 42, 9000, 90}), f);
  EXPECT_EQ(0.0, profile_features(u, t, 1090)[7]);
  try {
    profile_features(u, t, 2000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::NegativeOffset, e.code());
  }
}

TEST(TimelineFeatures, Chain) {
  const auto g = build_mention_graph(chain(3));
  EXPECT_EQ((TimelineFeatures{0, 1, 0, 1, 0, 1, 20}), timeline_features(g, "u0", 20));
  EXPECT_EQ((TimelineFeatures{1, 1, 1, 1, 0, 0, 20}), timeline_features(g, "u1", 20));
  EXPECT_EQ((TimelineFeatures{1, 0, 1, 0, 1, 0, 20}), timeline_features(g, "u2", 20));
}

TEST(TimelineFeatures, StarWithRepeatedMentions) {
  TimelineMap t;
  Timeline hub;
  for (int k = 0; k < 4; ++k) hub.mentions.push_back({"leaf" + std::to_string(k)});
  hub.mentions.push_back({"leaf0", "hub"});
  t["hub"] = hub;
  const auto g = build_mention_graph(t);
  const auto f = timeline_features(g, "hub", 500);
  EXPECT_EQ(0.0, f[0]);
  EXPECT_EQ(4.0, f[1]);
  EXPECT_EQ(5.0, f[3]);
  EXPECT_EQ(0.0, f[5]);
  EXPECT_EQ(200.0, f[6]);
  EXPECT_EQ(2u, g.weight("hub", "leaf0"));
  EXPECT_EQ(0u, g.weight("hub", "hub"));
  EXPECT_EQ(0.0, timeline_features(g, "leaf1", 0)[4]);
}

TEST(TimelineFeatures, UnknownUser) {
  const auto g = build_mention_graph(chain(2));
  try {
    timeline_features(g, "nobody", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::UnknownUser, e.code());
  }
}

TEST(TimelineFeatures, HopTwoMatchesBfsOracle) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 15)(rng);
    const double p = std::uniform_real_distribution<double>(0.05, 0.4)(rng);
    TimelineMap t;
    std::map<std::string, std::set<std::string>> out, in;
    for (int i = 0; i < n; ++i) {
      const std::string u = "u" + std::to_string(i);
      Timeline tl;
      for (int j = 0; j < n; ++j) {
        if (i == j || !std::bernoulli_distribution(p)(rng)) continue;
        const std::string v = "u" + std::to_string(j);
        tl.mentions.push_back({v});
        out[u].insert(v);
        in[v].insert(u);
      }
      t[u] = tl;
    }
    const auto g = build_mention_graph(t);
    for (int i = 0; i < n; ++i) {
      const std::string u = "u" + std::to_string(i);
      const auto f = timeline_features(g, u, 0);
      ASSERT_EQ(static_cast<double>(oracle::hop2(in, u)), f[4]) << trial << " " << u;
      ASSERT_EQ(static_cast<double>(oracle::hop2(out, u)), f[5]) << trial << " " << u;
    }
  }
}

TEST(FeatureRow, Modes) {
  const ProfileFeatures p{1, 2, 3, 4, 5, 6, 7, 8};
  const TimelineFeatures t{9, 10, 11, 12, 13, 14, 15};
  EXPECT_EQ(8u, feature_row(FeatureMode::ProfileOnly, p, t).size());
  EXPECT_EQ(7u, feature_row(FeatureMode::TimelineOnly, p, t).size());
  const auto c = feature_row(FeatureMode::Combined, p, t);
  ASSERT_EQ(15u, c.size());
  EXPECT_EQ(8.0, c[7]);
  EXPECT_EQ(9.0, c[8]);
  const auto missing = feature_row(FeatureMode::Combined, p, std::nullopt);
  EXPECT_EQ((std::vector<double>(7, 0.0)), std::vector<double>(missing.begin() + 8, missing.end()));
  EXPECT_EQ(FeatureMode::Combined, parse_feature_mode("combined"));
  EXPECT_THROW(parse_feature_mode("both"), Error);
}

TEST(AssembleFeatures, CountsMissingTimelines) {
  const std::vector<ProfileFeatures> p(3, ProfileFeatures{0, 1, 1, 1, 1, 1, 1, 1});
  const std::vector<std::optional<TimelineFeatures>> t{TimelineFeatures{}, std::nullopt, std::nullopt};
  const auto a = assemble_features(FeatureMode::Combined, p, t);
  EXPECT_EQ(4u, a.matrix.rows);
  EXPECT_EQ(15u, a.matrix.cols);
  EXPECT_EQ(2u, a.missing_timelines);
  for (std::size_t c = 0; c < 15; ++c) EXPECT_EQ(0.0, a.matrix.at(0, c));
  EXPECT_EQ(0u, assemble_features(FeatureMode::ProfileOnly, p, {}).missing_timelines);
}

TEST(NormStats, TwoValueColumn) {
  FeatureMatrix m(3, 8);
  m.at(1, 2) = 0.0;
  m.at(2, 2) = 10.0;
  m.at(1, 0) = 1.0;
  m.at(1, 4) = 3.0;
  m.at(2, 4) = 3.0;
  std::vector<FeatureMatrix*> ms{&m};
  const auto s = normalize_dataset(ms, FeatureMode::ProfileOnly);
  EXPECT_DOUBLE_EQ(5.0, s.mean[2]);
  EXPECT_DOUBLE_EQ(5.0, s.stddev[2]);
  EXPECT_DOUBLE_EQ(-1.0, m.at(1, 2));
  EXPECT_DOUBLE_EQ(1.0, m.at(2, 2));
  EXPECT_EQ(1.0, m.at(1, 0));
  EXPECT_EQ(3.0, m.at(1, 4));
  for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(0.0, m.at(0, c));
}

TEST(NormStats, TrainStatsAppliedToOtherMatrix) {
  FeatureMatrix train(3, 7), test(2, 7);
  train.at(1, 6) = 20;
  train.at(2, 6) = 40;
  test.at(1, 6) = 50;
  std::vector<const FeatureMatrix*> ms{&train};
  const auto s = fit_norm_stats(ms, FeatureMode::TimelineOnly);
  EXPECT_FALSE(s.exempt[0]);
  apply_norm_stats(test, s);
  EXPECT_DOUBLE_EQ(2.0, test.at(1, 6));
  FeatureMatrix wrong(2, 8);
  EXPECT_THROW(apply_norm_stats(wrong, s), Error);
}
