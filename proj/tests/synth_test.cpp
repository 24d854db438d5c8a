#include <cmath>
#include <map>
#include <string>

#include "gtest/gtest.h"

#include "cascadecl/error.hpp"
#include "cascadecl/io.hpp"
#include "cascadecl/synth.hpp"

using namespace cascadecl;

namespace {

RegimeConfig small(RegimeConfig r, std::size_t n_news) {
  r.n_news = n_news;
  return r;
}

}  // namespace

TEST(Synth, NoBranchingGivesRootsOnly) {
  RegimeConfig r = small(default_regimes().first, 30);
  r.branching = 0.0;
  const auto s = generate(r);
  std::map<Id, std::size_t> roots;
  for (const auto& t : s.corpus.tweets) {
    EXPECT_TRUE(t.is_root());
    ++roots[t.news_id];
  }
  ASSERT_EQ(30u, s.dataset.graphs.size());
  for (const auto& g : s.dataset.graphs) EXPECT_EQ(roots[g.news_id] + 1, g.n);
}

TEST(Synth, InvalidRegimes) {
  RegimeConfig r = default_regimes().first;
  r.cascade_mean = 0.5;
  try {
    generate_corpus(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::DegenerateRegime, e.code());
  }
  r = default_regimes().first;
  r.max_cascade_size = 0;
  EXPECT_THROW(r.validate(), Error);
  r = default_regimes().first;
  r.n_news = 4;
  EXPECT_THROW(r.validate(), Error);
  r = default_regimes().first;
  r.label_balance = 1.0;
  EXPECT_THROW(r.validate(), Error);
}

TEST(Synth, Deterministic) {
  const auto r = small(default_regimes().second, 20);
  const auto a = generate_corpus(r), b = generate_corpus(r);
  ASSERT_EQ(a.tweets.size(), b.tweets.size());
  for (std::size_t i = 0; i < a.tweets.size(); ++i) {
    EXPECT_EQ(to_json(a.tweets[i]), to_json(b.tweets[i]));
  }
  auto other = r;
  other.seed += 1;
  const auto c = generate_corpus(other);
  const Id first = a.tweets.front().user_id;
  EXPECT_EQ(to_json(a.users.at(first)), to_json(b.users.at(first)));
  EXPECT_NE(to_json(a.users.at(first)), to_json(c.users.at(first)));
}

TEST(Synth, ExactLabelBalanceAndLayout) {
  const auto s = generate(small(default_regimes().first, 40));
  EXPECT_EQ(20u, s.manifest.realized.fake);
  EXPECT_EQ(20u, s.manifest.realized.real);
  EXPECT_EQ(40u, s.manifest.build.graphs);
  for (const auto& g : s.dataset.graphs) {
    EXPECT_GE(g.n, 2u);
    EXPECT_LE(g.n, 1 + 30 * 40u);
  }
  const auto j = to_json(s.manifest);
  EXPECT_EQ("A", j["regime"]["name"]);
}

TEST(Synth, RegimesDifferInStructure) {
  const auto [ra, rb] = default_regimes();
  const auto a = generate(small(ra, 80)).manifest.realized;
  const auto b = generate(small(rb, 80)).manifest.realized;
  const double density_a = a.mean_edges / a.mean_nodes, density_b = b.mean_edges / b.mean_nodes;
  EXPECT_GE(density_a, 2.0 * density_b) << density_a << " vs " << density_b;
  EXPECT_GE(a.mean_nodes, 2.0 * b.mean_nodes);
}

TEST(Synth, ShiftMovesFakeProfiles) {
  const auto s = generate_corpus(small(default_regimes().first, 80));
  double log_followers[2] = {0, 0}, count[2] = {0, 0};
  for (const auto& t : s.tweets) {
    const int k = s.labels.at(t.news_id) == Label::Fake ? 1 : 0;
    log_followers[k] += std::log1p(static_cast<double>(s.users.at(t.user_id).followers));
    count[k] += 1;
  }
  // shift[2] = -1: fake items sit a full standard deviation below real ones
  EXPECT_LT(log_followers[1] / count[1] + 0.6, log_followers[0] / count[0]);
}
