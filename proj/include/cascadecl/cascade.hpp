#pragma once

// Turning per-news tweet/user records into labeled propagation graphs.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cascadecl {

using Id = std::string;

struct TweetRecord {
  Id tweet_id;
  Id news_id;
  Id user_id;
  std::int64_t timestamp_s = 0;
  std::optional<Id> root_tweet_id;  // absent => root tweet referencing the news
  std::set<Id> mentioned_user_ids;
  bool is_public = true;

  bool is_root() const { return !root_tweet_id.has_value(); }
};

struct UserProfile {
  Id user_id;
  bool verified = false;
  std::int64_t created_months = 0;  // months since 2006-03
  std::int64_t followers = 0;
  std::int64_t friends = 0;
  std::int64_t lists = 0;
  std::int64_t favourites = 0;
  std::int64_t statuses = 0;
  std::set<Id> follows;
};

using UserMap = std::unordered_map<Id, UserProfile>;

/// Global chronological order: (timestamp_s, tweet_id).
bool tweet_before(const TweetRecord& a, const TweetRecord& b);

struct Cascade {
  Id root_tweet_id;
  std::vector<TweetRecord> tweets;  // tweets[0] is the root
};

enum class Label : std::uint8_t { Real = 0, Fake = 1 };

struct NodeMeta {
  Id tweet_id;
  Id user_id;
  std::int64_t timestamp_s = 0;
};

using Edge = std::pair<std::uint32_t, std::uint32_t>;

/// Row-major n x d feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Node 0 is the virtual news node; tweet nodes follow in global chronological order.
struct PropagationGraph {
  Id news_id;
  std::size_t n = 0;
  std::set<Edge> edges;
  FeatureMatrix features;
  Label label = Label::Real;
  std::vector<NodeMeta> node_meta;

  std::size_t dim() const { return features.cols; }
};

struct ClipSpec {
  std::optional<std::size_t> max_tweets;
  std::optional<double> max_hours;

  bool unbounded() const { return !max_tweets && !max_hours; }
};

/// Groups one news item's tweets by root, each cascade sorted chronologically.
/// Cascades are returned in chronological order of their roots.
std::vector<Cascade> group_cascades(const std::vector<TweetRecord>& tweets);

struct EdgeRules {
  double time_window_h = 5.0;
  bool use_follow = false;
};

/// Edges between positions of `cascade.tweets` (i earlier, j later).
std::set<Edge> infer_edges(const Cascade& cascade, const UserMap& users, const EdgeRules& rules);

/// `edge_sets[k]` indexes into `cascades[k].tweets`; `feature_rows` is keyed by tweet_id.
PropagationGraph assemble_graph(const Id& news_id, Label label,
                                const std::vector<Cascade>& cascades,
                                const std::vector<std::set<Edge>>& edge_sets,
                                const std::map<Id, std::vector<double>>& feature_rows);

/// Chronological prefix honoring both bounds; input must already be sorted by tweet_before.
std::vector<TweetRecord> clip_tweets(const std::vector<TweetRecord>& sorted_tweets,
                                     const ClipSpec& spec);

}  // namespace cascadecl
