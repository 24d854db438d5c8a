#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gtest/gtest.h"

#include "cascadecl/cascade.hpp"
#include "cascadecl/error.hpp"
#include "oracles.hpp"

using namespace cascadecl;

namespace {

TweetRecord tweet(const std::string& id, const std::string& user, std::int64_t ts,
                  std::optional<std::string> root = std::nullopt, bool is_public = true) {
  TweetRecord t;
  t.tweet_id = id;
  t.news_id = "n1";
  t.user_id = user;
  t.timestamp_s = ts;
  t.root_tweet_id = std::move(root);
  t.is_public = is_public;
  return t;
}

UserMap users_for(const std::vector<TweetRecord>& tweets) {
  UserMap users;
  for (const auto& t : tweets) users[t.user_id].user_id = t.user_id;
  return users;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

// Figure-1 layout: roots A and F, B..E retweet A.
std::vector<TweetRecord> figure_one() {
  return {tweet("A", "ua", 0), tweet("B", "ub", 60, "A"), tweet("C", "uc", 120, "A"),
          tweet("D", "ud", 180, "A"), tweet("E", "ue", 240, "A"), tweet("F", "uf", 90)};
}

}  // namespace

TEST(GroupCascades, SingleRoot) {
  const auto c = group_cascades({tweet("A", "ua", 5)});
  ASSERT_EQ(1u, c.size());
  EXPECT_EQ(1u, c[0].tweets.size());
}

TEST(GroupCascades, FigureOneLayout) {
  const auto c = group_cascades(figure_one());
  ASSERT_EQ(2u, c.size());
  std::vector<std::string> first;
  for (const auto& t : c[0].tweets) first.push_back(t.tweet_id);
  EXPECT_EQ((std::vector<std::string>{"A", "B", "C", "D", "E"}), first);
  ASSERT_EQ(1u, c[1].tweets.size());
  EXPECT_EQ("F", c[1].tweets[0].tweet_id);
}

TEST(GroupCascades, ShuffledTimestampsMatchFullSort) {
  std::vector<TweetRecord> t{tweet("r", "u0", 0), tweet("x3", "u1", 50, "r"), tweet("x1", "u2", 20, "r"),
                             tweet("x2", "u3", 20, "r"), tweet("x0", "u4", 90, "r")};
  std::mt19937 rng(4);
  std::shuffle(t.begin(), t.end(), rng);
  const auto c = group_cascades(t);
  std::vector<std::string> got;
  for (const auto& x : c[0].tweets) got.push_back(x.tweet_id);
  EXPECT_EQ((std::vector<std::string>{"r", "x1", "x2", "x3", "x0"}), got);
}

TEST(GroupCascades, Errors) {
  EXPECT_EQ(ErrorCode::OrphanRetweet, code_of([] { group_cascades({tweet("B", "ub", 1, "missing")}); }));
  auto other = tweet("G", "ug", 3);
  other.news_id = "n2";
  EXPECT_EQ(ErrorCode::MixedNews, code_of([&] { group_cascades({tweet("A", "ua", 0), other}); }));
}

TEST(InferEdges, PublicWithinWindow) {
  const std::vector<TweetRecord> t{tweet("A", "ua", 0), tweet("E", "ue", 100, "A")};
  const auto c = group_cascades(t);
  const auto e = infer_edges(c[0], users_for(t), EdgeRules{1.0, false});
  EXPECT_EQ((std::set<Edge>{{0, 1}}), e);
}

TEST(InferEdges, MentionOutsideWindow) {
  auto t = figure_one();
  for (auto& x : t) x.is_public = false;
  t[2].mentioned_user_ids.insert("ue");  // C mentions E's user
  t[4].timestamp_s = 100000;
  const auto c = group_cascades(t);
  const auto e = infer_edges(c[0], users_for(t), EdgeRules{1.0, false});
  EXPECT_EQ((std::set<Edge>{{2, 4}}), e);
}

TEST(InferEdges, UnknownUser) {
  const auto c = group_cascades({tweet("A", "ua", 0), tweet("B", "ub", 1, "A")});
  UserMap users;
  users["ua"].user_id = "ua";
  EXPECT_EQ(ErrorCode::UnknownUser, code_of([&] { infer_edges(c[0], users, EdgeRules{}); }));
}

TEST(InferEdges, MatchesPairwiseOracleOnRandomCascades) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 20)(rng);
    const double window = std::uniform_int_distribution<int>(1, 10)(rng);
    const bool use_follow = trial % 2 == 1;
    const int n_users = std::uniform_int_distribution<int>(1, n)(rng);
    std::vector<TweetRecord> t;
    long long ts = 0;
    for (int i = 0; i < n; ++i) {
      ts += std::uniform_int_distribution<int>(0, 4 * 3600)(rng);
      const std::string user = "u" + std::to_string(std::uniform_int_distribution<int>(0, n_users - 1)(rng));
      auto x = tweet("t" + std::to_string(100 + i), user, ts, i == 0 ? std::nullopt : std::optional<std::string>("t100"),
                     std::bernoulli_distribution(0.6)(rng));
      for (int m = 0; m < 2; ++m) {
        if (std::bernoulli_distribution(0.2)(rng)) {
          x.mentioned_user_ids.insert("u" + std::to_string(std::uniform_int_distribution<int>(0, n_users - 1)(rng)));
        }
      }
      t.push_back(x);
    }
    UserMap users = users_for(t);
    std::map<std::string, std::set<std::string>> follows;
    for (auto& [id, u] : users) {
      for (int k = 0; k < n_users; ++k) {
        if (std::bernoulli_distribution(0.15)(rng)) {
          u.follows.insert("u" + std::to_string(k));
          follows[id].insert("u" + std::to_string(k));
        }
      }
    }
    const auto c = group_cascades(t);
    ASSERT_EQ(1u, c.size());
    std::vector<oracle::Tweet> ot;
    for (const auto& x : c[0].tweets) ot.push_back({x.user_id, x.timestamp_s, x.is_public, x.mentioned_user_ids});
    const auto expected = oracle::edges(ot, window, use_follow, follows);
    const auto got = infer_edges(c[0], users, EdgeRules{window, use_follow});
    std::set<std::pair<unsigned, unsigned>> got_u(got.begin(), got.end());
    ASSERT_EQ(expected, got_u) << "trial " << trial;
  }
}

TEST(AssembleGraph, SingleTweet) {
  const auto c = group_cascades({tweet("A", "ua", 0)});
  const auto g = assemble_graph("n1", Label::Fake, c, {{}}, {{"A", {1.0, 2.0}}});
  EXPECT_EQ(2u, g.n);
  EXPECT_EQ((std::set<Edge>{{0, 1}}), g.edges);
  EXPECT_EQ(0.0, g.features.at(0, 0));
  EXPECT_EQ(2.0, g.features.at(1, 1));
  EXPECT_EQ(Label::Fake, g.label);
}

TEST(AssembleGraph, FigureOneNewsNode) {
  const auto t = figure_one();
  const auto c = group_cascades(t);
  std::vector<std::set<Edge>> es;
  std::map<Id, std::vector<double>> rows;
  for (const auto& x : t) rows[x.tweet_id] = {1.0};
  for (const auto& k : c) es.push_back(infer_edges(k, users_for(t), EdgeRules{}));
  const auto g = assemble_graph("n1", Label::Real, c, es, rows);
  EXPECT_EQ(7u, g.n);
  std::size_t out0 = 0, in0 = 0;
  for (const auto& [s, d] : g.edges) {
    out0 += s == 0;
    in0 += d == 0;
    EXPECT_NE(s, d);
  }
  EXPECT_EQ(2u, out0);
  EXPECT_EQ(0u, in0);
  // global chronological numbering: A(0) B(60) F(90) C(120) D(180) E(240)
  EXPECT_EQ("F", g.node_meta[3].tweet_id);
  EXPECT_TRUE(g.edges.count({0, 3}));
}

TEST(AssembleGraph, EdgeCountIsSumOfParts) {
  std::vector<TweetRecord> t;
  for (int k = 0; k < 3; ++k) {
    const std::string root = "r" + std::to_string(k);
    t.push_back(tweet(root, "u" + root, k * 10));
  }
  for (int i = 0; i < 7; ++i) t.push_back(tweet("x" + std::to_string(i), "ux" + std::to_string(i), 5 + i * 3, "r" + std::to_string(i % 3)));
  const auto c = group_cascades(t);
  std::vector<std::set<Edge>> es;
  std::size_t parts = 0;
  for (const auto& k : c) {
    es.push_back(infer_edges(k, users_for(t), EdgeRules{}));
    parts += es.back().size();
  }
  std::map<Id, std::vector<double>> rows;
  for (const auto& x : t) rows[x.tweet_id] = {0.5, 0.5};
  const auto g = assemble_graph("n1", Label::Real, c, es, rows);
  EXPECT_EQ(11u, g.n);
  EXPECT_EQ(parts + 3, g.edges.size());
  rows["x0"] = {1.0};
  EXPECT_EQ(ErrorCode::DimensionMismatch, code_of([&] { assemble_graph("n1", Label::Real, c, es, rows); }));
}

TEST(ClipTweets, Bounds) {
  std::vector<TweetRecord> fifty;
  for (int i = 0; i < 50; ++i) fifty.push_back(tweet("t" + std::to_string(1000 + i), "u", i));
  EXPECT_EQ(50u, clip_tweets(fifty, ClipSpec{100, std::nullopt}).size());

  std::vector<TweetRecord> three_hundred;
  for (int i = 0; i < 300; ++i) three_hundred.push_back(tweet("t" + std::to_string(1000 + i), "u", i * 24));
  const auto kept = clip_tweets(three_hundred, ClipSpec{100, 5.0});
  ASSERT_EQ(100u, kept.size());
  EXPECT_EQ("t1099", kept.back().tweet_id);

  std::vector<TweetRecord> mixed;
  for (int i = 0; i < 150; ++i) mixed.push_back(tweet("t" + std::to_string(1000 + i), "u", i < 120 ? i * 90 : 20000 + i));
  EXPECT_EQ(120u, clip_tweets(mixed, ClipSpec{200, 3.0}).size());
}

TEST(ClipTweets, TighterBoundsNeverGrow) {
  std::vector<TweetRecord> t;
  for (int i = 0; i < 80; ++i) t.push_back(tweet("t" + std::to_string(1000 + i), "u", i * i * 7));
  std::size_t prev = t.size();
  for (double h : {10.0, 7.0, 5.0, 3.0, 1.0}) {
    const auto k = clip_tweets(t, ClipSpec{std::nullopt, h}).size();
    EXPECT_LE(k, prev);
    prev = k;
  }
  EXPECT_EQ(ErrorCode::EmptyResult, code_of([] { clip_tweets({}, ClipSpec{5, std::nullopt}); }));
}
