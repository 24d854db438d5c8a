#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "cascadecl/cascade.hpp"

namespace cascadecl {

/// [verified, created_months, followers, friends, lists, favourites, statuses, tweet_offset_s]
using ProfileFeatures = std::array<double, 8>;

/// [in_degree, out_degree, weighted_in, weighted_out, hop2_in, hop2_out, timeline_tweet_count]
using TimelineFeatures = std::array<double, 7>;

inline constexpr std::size_t kMaxTimelineTweets = 200;

enum class FeatureMode { ProfileOnly, TimelineOnly, Combined };

std::size_t feature_dim(FeatureMode mode);
std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view text);

ProfileFeatures profile_features(const UserProfile& user, const TweetRecord& tweet, std::int64_t t0);

/// Weighted directed user-mention graph built from timeline tweets.
struct MentionGraph {
  std::set<Id> nodes;
  std::map<Id, std::map<Id, std::size_t>> out;  // out[i][j] = times i mentioned j
  std::map<Id, std::map<Id, std::size_t>> in;   // in[j][i] mirrors out[i][j]

  std::size_t weight(const Id& from, const Id& to) const;
  std::size_t edge_count() const;
};

/// Timeline of one user: each entry lists the users mentioned by one timeline tweet.
struct Timeline {
  std::vector<std::vector<Id>> mentions;
  std::size_t tweet_count = 0;  // collected timeline tweets, at most kMaxTimelineTweets
};

using TimelineMap = std::map<Id, Timeline>;

MentionGraph build_mention_graph(const TimelineMap& timelines);

TimelineFeatures timeline_features(const MentionGraph& g, const Id& user, std::size_t timeline_count);

/// One node's feature row under `mode`. A missing timeline yields zeros in the timeline slots.
std::vector<double> feature_row(FeatureMode mode, const ProfileFeatures& profile,
                                const std::optional<TimelineFeatures>& timeline);

struct AssembledFeatures {
  FeatureMatrix matrix;          // row 0 is the news node
  std::size_t missing_timelines = 0;
};

/// Builds the (tweets + 1) x d matrix; rows of `profiles`/`timelines` are tweet nodes 1..n-1.
AssembledFeatures assemble_features(FeatureMode mode, std::span<const ProfileFeatures> profiles,
                                    std::span<const std::optional<TimelineFeatures>> timelines);

/// Per-column z-score statistics over tweet-node rows of a training split.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> exempt;

  std::size_t dim() const { return mean.size(); }
};

NormStats fit_norm_stats(std::span<const FeatureMatrix* const> matrices, FeatureMode mode);

/// Applies stats in place; the news-node row (row 0) stays zero.
void apply_norm_stats(FeatureMatrix& matrix, const NormStats& stats);

NormStats normalize_dataset(std::span<FeatureMatrix* const> matrices, FeatureMode mode);

}  // namespace cascadecl
