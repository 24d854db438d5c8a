#include "cascadecl/dataset.hpp"

#include <algorithm>

#include "cascadecl/error.hpp"

namespace cascadecl {

PropagationGraph build_news_graph(const Id& news_id, Label label, std::vector<TweetRecord> tweets,
                                  const UserMap& users, const TimelineMap* timelines,
                                  const BuildOptions& options, std::size_t& missing_timelines) {
  std::sort(tweets.begin(), tweets.end(), tweet_before);
  if (!options.clip.unbounded()) tweets = clip_tweets(tweets, options.clip);
  if (tweets.empty()) throw Error(ErrorCode::EmptyResult, "news '" + news_id + "' has no tweets");

  const auto cascades = group_cascades(tweets);
  std::vector<std::set<Edge>> edge_sets;
  edge_sets.reserve(cascades.size());
  for (const auto& c : cascades) edge_sets.push_back(infer_edges(c, users, options.rules));

  const bool needs_timeline = options.mode != FeatureMode::ProfileOnly;
  MentionGraph mentions;
  if (needs_timeline && timelines != nullptr) {
    TimelineMap local;
    for (const auto& t : tweets) {
      auto it = timelines->find(t.user_id);
      if (it != timelines->end()) local.emplace(it->first, it->second);
    }
    mentions = build_mention_graph(local);
  }

  const std::int64_t t0 = tweets.front().timestamp_s;
  std::map<Id, std::vector<double>> rows;
  for (const auto& t : tweets) {
    const UserProfile& user = users.at(t.user_id);  // presence checked by infer_edges
    const ProfileFeatures profile = profile_features(user, t, t0);
    std::optional<TimelineFeatures> tl;
    if (needs_timeline) {
      const Timeline* timeline = nullptr;
      if (timelines != nullptr) {
        auto it = timelines->find(t.user_id);
        if (it != timelines->end()) timeline = &it->second;
      }
      if (timeline != nullptr) {
        tl = timeline_features(mentions, t.user_id, timeline->tweet_count);
      } else {
        ++missing_timelines;
      }
    }
    rows.emplace(t.tweet_id, feature_row(options.mode, profile, tl));
  }
  return assemble_graph(news_id, label, cascades, edge_sets, rows);
}

BuildResult build_dataset(const RawCorpus& corpus, const BuildOptions& options) {
  std::map<Id, std::vector<TweetRecord>> by_news;
  for (const auto& t : corpus.tweets) by_news[t.news_id].push_back(t);

  BuildResult out;
  out.dataset.mode = options.mode;
  const TimelineMap* timelines = corpus.timelines ? &*corpus.timelines : nullptr;
  for (auto& [news_id, tweets] : by_news) {
    ++out.stats.news_seen;
    auto label = corpus.labels.find(news_id);
    if (label == corpus.labels.end()) {
      ++out.stats.dropped_unlabeled;
      out.stats.warnings.push_back("news '" + news_id + "' has no label; skipped");
      continue;
    }
    const std::size_t tweet_count = tweets.size();
    try {
      std::size_t missing = 0;
      PropagationGraph g = build_news_graph(news_id, label->second, std::move(tweets), corpus.users,
                                            timelines, options, missing);
      out.stats.missing_timelines += missing;
      out.stats.tweets_used += g.n - 1;
      out.stats.edges += g.edges.size();
      out.dataset.graphs.push_back(std::move(g));
    } catch (const Error& e) {
      if (options.strict) throw;
      switch (e.code()) {
        case ErrorCode::EmptyResult: ++out.stats.dropped_empty; break;
        case ErrorCode::OrphanRetweet: ++out.stats.dropped_orphan; break;
        case ErrorCode::UnknownUser: ++out.stats.dropped_unknown_user; break;
        default: throw;
      }
      out.stats.warnings.push_back("news '" + news_id + "' (" + std::to_string(tweet_count) +
                                   " tweets) skipped: " + e.what());
    }
  }
  out.stats.graphs = out.dataset.graphs.size();
  return out;
}

DatasetSummary summarize(const GraphDataset& dataset) {
  DatasetSummary s;
  for (const auto& g : dataset.graphs) {
    s.mean_nodes += static_cast<double>(g.n);
    s.mean_edges += static_cast<double>(g.edges.size());
    s.max_nodes = std::max(s.max_nodes, g.n);
    if (g.label == Label::Fake) ++s.fake;
    else ++s.real;
  }
  if (!dataset.graphs.empty()) {
    s.mean_nodes /= static_cast<double>(dataset.graphs.size());
    s.mean_edges /= static_cast<double>(dataset.graphs.size());
  }
  return s;
}

}  // namespace cascadecl
