#include "cascadecl/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cascadecl/error.hpp"

namespace cascadecl {

std::size_t feature_dim(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::ProfileOnly: return 8;
    case FeatureMode::TimelineOnly: return 7;
    case FeatureMode::Combined: return 15;
  }
  return 0;
}

std::string_view to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::ProfileOnly: return "profile";
    case FeatureMode::TimelineOnly: return "timeline";
    case FeatureMode::Combined: return "combined";
  }
  return "?";
}

FeatureMode parse_feature_mode(std::string_view text) {
  if (text == "profile") return FeatureMode::ProfileOnly;
  if (text == "timeline") return FeatureMode::TimelineOnly;
  if (text == "combined") return FeatureMode::Combined;
  throw Error(ErrorCode::InvalidConfig, "unknown feature mode '" + std::string(text) + "'");
}

ProfileFeatures profile_features(const UserProfile& user, const TweetRecord& tweet, std::int64_t t0) {
  if (tweet.timestamp_s < t0) {
    throw Error(ErrorCode::NegativeOffset, "tweet '" + tweet.tweet_id + "' predates the first tweet");
  }
  return {user.verified ? 1.0 : 0.0,
          static_cast<double>(user.created_months),
          static_cast<double>(user.followers),
          static_cast<double>(user.friends),
          static_cast<double>(user.lists),
          static_cast<double>(user.favourites),
          static_cast<double>(user.statuses),
          static_cast<double>(tweet.timestamp_s - t0)};
}

std::size_t MentionGraph::weight(const Id& from, const Id& to) const {
  auto it = out.find(from);
  if (it == out.end()) return 0;
  auto jt = it->second.find(to);
  return jt == it->second.end() ? 0 : jt->second;
}

std::size_t MentionGraph::edge_count() const {
  std::size_t m = 0;
  for (const auto& [_, targets] : out) m += targets.size();
  return m;
}

MentionGraph build_mention_graph(const TimelineMap& timelines) {
  MentionGraph g;
  for (const auto& [user, timeline] : timelines) {
    g.nodes.insert(user);
    for (const auto& tweet : timeline.mentions) {
      for (const auto& target : tweet) {
        if (target == user) continue;
        g.nodes.insert(target);
        ++g.out[user][target];
        ++g.in[target][user];
      }
    }
  }
  return g;
}

namespace {

using Adjacency = std::map<Id, std::map<Id, std::size_t>>;

const std::map<Id, std::size_t>& neighbours(const Adjacency& adj, const Id& u) {
  static const std::map<Id, std::size_t> kEmpty;
  auto it = adj.find(u);
  return it == adj.end() ? kEmpty : it->second;
}

// Nodes at distance exactly two from `u` along `adj`.
std::size_t hop2_count(const Adjacency& adj, const Id& u) {
  const auto& first = neighbours(adj, u);
  std::set<Id> second;
  for (const auto& [v, _] : first) {
    for (const auto& [w, __] : neighbours(adj, v)) {
      if (w != u && first.count(w) == 0) second.insert(w);
    }
  }
  return second.size();
}

double weight_sum(const std::map<Id, std::size_t>& m) {
  double s = 0.0;
  for (const auto& [_, w] : m) s += static_cast<double>(w);
  return s;
}

}  // namespace

TimelineFeatures timeline_features(const MentionGraph& g, const Id& user, std::size_t timeline_count) {
  if (g.nodes.count(user) == 0) {
    throw Error(ErrorCode::UnknownUser, "user '" + user + "' is not in the mention graph");
  }
  const auto& in = neighbours(g.in, user);
  const auto& out = neighbours(g.out, user);
  return {static_cast<double>(in.size()),
          static_cast<double>(out.size()),
          weight_sum(in),
          weight_sum(out),
          static_cast<double>(hop2_count(g.in, user)),
          static_cast<double>(hop2_count(g.out, user)),
          static_cast<double>(std::min(timeline_count, kMaxTimelineTweets))};
}

std::vector<double> feature_row(FeatureMode mode, const ProfileFeatures& profile,
                                const std::optional<TimelineFeatures>& timeline) {
  std::vector<double> row;
  row.reserve(feature_dim(mode));
  if (mode != FeatureMode::TimelineOnly) row.insert(row.end(), profile.begin(), profile.end());
  if (mode != FeatureMode::ProfileOnly) {
    if (timeline) {
      row.insert(row.end(), timeline->begin(), timeline->end());
    } else {
      row.insert(row.end(), std::tuple_size_v<TimelineFeatures>, 0.0);
    }
  }
  return row;
}

AssembledFeatures assemble_features(FeatureMode mode, std::span<const ProfileFeatures> profiles,
                                    std::span<const std::optional<TimelineFeatures>> timelines) {
  const bool needs_timeline = mode != FeatureMode::ProfileOnly;
  if (needs_timeline && timelines.size() != profiles.size()) {
    throw Error(ErrorCode::DimensionMismatch, "timeline rows do not match profile rows");
  }
  const std::size_t d = feature_dim(mode);
  AssembledFeatures out{FeatureMatrix(profiles.size() + 1, d), 0};
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    std::optional<TimelineFeatures> tl;
    if (needs_timeline) {
      tl = timelines[i];
      if (!tl) ++out.missing_timelines;
    }
    auto row = feature_row(mode, profiles[i], tl);
    std::copy(row.begin(), row.end(), out.matrix.data.begin() + (i + 1) * d);
  }
  return out;
}

NormStats fit_norm_stats(std::span<const FeatureMatrix* const> matrices, FeatureMode mode) {
  const std::size_t d = feature_dim(mode);
  NormStats stats{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0),
                  std::vector<bool>(d, false)};
  if (mode != FeatureMode::TimelineOnly) stats.exempt[0] = true;  // verified flag

  std::size_t count = 0;
  for (const auto* m : matrices) {
    if (m->cols != d) throw Error(ErrorCode::DimensionMismatch, "matrix width differs from mode");
    for (std::size_t r = 1; r < m->rows; ++r) {
      for (std::size_t c = 0; c < d; ++c) stats.mean[c] += m->at(r, c);
      ++count;
    }
  }
  if (count == 0) return stats;
  for (auto& v : stats.mean) v /= static_cast<double>(count);
  for (const auto* m : matrices) {
    for (std::size_t r = 1; r < m->rows; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        const double dv = m->at(r, c) - stats.mean[c];
        stats.stddev[c] += dv * dv;
      }
    }
  }
  for (auto& v : stats.stddev) v = std::sqrt(v / static_cast<double>(count));
  return stats;
}

void apply_norm_stats(FeatureMatrix& matrix, const NormStats& stats) {
  if (matrix.cols != stats.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "normalization stats have dimension " +
                                                  std::to_string(stats.dim()) + ", matrix has " +
                                                  std::to_string(matrix.cols));
  }
  for (std::size_t c = 0; c < matrix.cols; ++c) {
    if (stats.exempt[c] || stats.stddev[c] == 0.0) continue;
    for (std::size_t r = 1; r < matrix.rows; ++r) {
      matrix.at(r, c) = (matrix.at(r, c) - stats.mean[c]) / stats.stddev[c];
    }
  }
}

NormStats normalize_dataset(std::span<FeatureMatrix* const> matrices, FeatureMode mode) {
  std::vector<const FeatureMatrix*> view(matrices.begin(), matrices.end());
  NormStats stats = fit_norm_stats(view, mode);
  for (auto* m : matrices) apply_norm_stats(*m, stats);
  return stats;
}

}  // namespace cascadecl
