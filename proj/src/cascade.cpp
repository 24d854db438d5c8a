#include "cascadecl/cascade.hpp"

#include <algorithm>
#include <unordered_map>

#include "cascadecl/error.hpp"

namespace cascadecl {

bool tweet_before(const TweetRecord& a, const TweetRecord& b) {
  if (a.timestamp_s != b.timestamp_s) return a.timestamp_s < b.timestamp_s;
  return a.tweet_id < b.tweet_id;
}

std::vector<Cascade> group_cascades(const std::vector<TweetRecord>& tweets) {
  std::vector<Cascade> cascades;
  if (tweets.empty()) return cascades;

  const Id& news = tweets.front().news_id;
  std::unordered_map<Id, std::size_t> root_index;
  for (const auto& t : tweets) {
    if (t.news_id != news) {
      throw Error(ErrorCode::MixedNews, "tweets from news '" + news + "' and '" + t.news_id + "'");
    }
    if (t.is_root()) {
      root_index.emplace(t.tweet_id, cascades.size());
      cascades.push_back(Cascade{t.tweet_id, {t}});
    }
  }
  for (const auto& t : tweets) {
    if (t.is_root()) continue;
    auto it = root_index.find(*t.root_tweet_id);
    if (it == root_index.end()) {
      throw Error(ErrorCode::OrphanRetweet,
                  "tweet '" + t.tweet_id + "' references missing root '" + *t.root_tweet_id + "'");
    }
    cascades[it->second].tweets.push_back(t);
  }
  for (auto& c : cascades) {
    // root stays at position 0 even if a retweet carries an earlier timestamp
    std::sort(c.tweets.begin() + 1, c.tweets.end(), tweet_before);
  }
  std::sort(cascades.begin(), cascades.end(), [](const Cascade& a, const Cascade& b) {
    return tweet_before(a.tweets.front(), b.tweets.front());
  });
  return cascades;
}

std::set<Edge> infer_edges(const Cascade& cascade, const UserMap& users, const EdgeRules& rules) {
  const auto& tw = cascade.tweets;
  std::vector<const UserProfile*> profiles;
  profiles.reserve(tw.size());
  for (const auto& t : tw) {
    auto it = users.find(t.user_id);
    if (it == users.end()) {
      throw Error(ErrorCode::UnknownUser,
                  "user '" + t.user_id + "' of tweet '" + t.tweet_id + "' has no profile");
    }
    profiles.push_back(&it->second);
  }

  const double window_s = rules.time_window_h * 3600.0;
  std::set<Edge> edges;
  for (std::size_t j = 1; j < tw.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const bool mention = tw[i].mentioned_user_ids.count(tw[j].user_id) > 0;
      const bool in_window =
          tw[i].is_public && static_cast<double>(tw[j].timestamp_s - tw[i].timestamp_s) <= window_s;
      const bool follows = rules.use_follow && profiles[j]->follows.count(tw[i].user_id) > 0;
      if (mention || in_window || follows) {
        edges.emplace(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      }
    }
  }
  return edges;
}

PropagationGraph assemble_graph(const Id& news_id, Label label,
                                const std::vector<Cascade>& cascades,
                                const std::vector<std::set<Edge>>& edge_sets,
                                const std::map<Id, std::vector<double>>& feature_rows) {
  if (edge_sets.size() != cascades.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one edge set per cascade required");
  }

  struct Slot {
    const TweetRecord* tweet;
    std::size_t cascade;
    std::size_t pos;
  };
  std::vector<Slot> slots;
  for (std::size_t k = 0; k < cascades.size(); ++k) {
    for (std::size_t p = 0; p < cascades[k].tweets.size(); ++p) {
      slots.push_back({&cascades[k].tweets[p], k, p});
    }
  }
  std::sort(slots.begin(), slots.end(),
            [](const Slot& a, const Slot& b) { return tweet_before(*a.tweet, *b.tweet); });

  std::vector<std::vector<std::uint32_t>> node_of(cascades.size());
  for (std::size_t k = 0; k < cascades.size(); ++k) node_of[k].resize(cascades[k].tweets.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    node_of[slots[s].cascade][slots[s].pos] = static_cast<std::uint32_t>(s + 1);
  }

  std::size_t d = 0;
  if (!slots.empty()) {
    auto it = feature_rows.find(slots.front().tweet->tweet_id);
    if (it == feature_rows.end()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "no feature row for tweet '" + slots.front().tweet->tweet_id + "'");
    }
    d = it->second.size();
  }

  PropagationGraph g;
  g.news_id = news_id;
  g.label = label;
  g.n = slots.size() + 1;
  g.features = FeatureMatrix(g.n, d);
  g.node_meta.resize(g.n);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const auto& t = *slots[s].tweet;
    auto it = feature_rows.find(t.tweet_id);
    if (it == feature_rows.end() || it->second.size() != d) {
      throw Error(ErrorCode::DimensionMismatch,
                  "feature row for tweet '" + t.tweet_id + "' missing or not of dimension " +
                      std::to_string(d));
    }
    std::copy(it->second.begin(), it->second.end(), g.features.data.begin() + (s + 1) * d);
    g.node_meta[s + 1] = NodeMeta{t.tweet_id, t.user_id, t.timestamp_s};
  }

  for (std::size_t k = 0; k < cascades.size(); ++k) {
    g.edges.emplace(0u, node_of[k][0]);
    for (const auto& [i, j] : edge_sets[k]) {
      if (i >= node_of[k].size() || j >= node_of[k].size()) {
        throw Error(ErrorCode::DimensionMismatch, "edge index outside cascade");
      }
      g.edges.emplace(node_of[k][i], node_of[k][j]);
    }
  }
  return g;
}

std::vector<TweetRecord> clip_tweets(const std::vector<TweetRecord>& sorted_tweets,
                                     const ClipSpec& spec) {
  std::vector<TweetRecord> kept;
  if (!sorted_tweets.empty()) {
    const std::int64_t t0 = sorted_tweets.front().timestamp_s;
    for (const auto& t : sorted_tweets) {
      if (spec.max_tweets && kept.size() >= *spec.max_tweets) break;
      if (spec.max_hours && static_cast<double>(t.timestamp_s - t0) > *spec.max_hours * 3600.0) break;
      kept.push_back(t);
    }
  }
  if (kept.empty()) throw Error(ErrorCode::EmptyResult, "clip bounds leave no tweets");
  return kept;
}

}  // namespace cascadecl
