#pragma once

// Raw social records -> labeled graph dataset.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cascadecl/cascade.hpp"
#include "cascadecl/features.hpp"

namespace cascadecl {

struct RawCorpus {
  std::vector<TweetRecord> tweets;
  UserMap users;
  std::optional<TimelineMap> timelines;
  std::map<Id, Label> labels;
};

struct BuildOptions {
  FeatureMode mode = FeatureMode::ProfileOnly;
  ClipSpec clip;
  EdgeRules rules;
  /// Abort on the first bad news item instead of skipping it.
  bool strict = false;
};

struct GraphDataset {
  FeatureMode mode = FeatureMode::ProfileOnly;
  std::vector<PropagationGraph> graphs;

  std::size_t dim() const { return feature_dim(mode); }
};

struct BuildStats {
  std::size_t news_seen = 0;
  std::size_t graphs = 0;
  std::size_t dropped_empty = 0;      // clip bounds removed every tweet
  std::size_t dropped_orphan = 0;
  std::size_t dropped_unknown_user = 0;
  std::size_t dropped_unlabeled = 0;
  std::size_t missing_timelines = 0;  // tweet nodes whose user had no timeline
  std::size_t tweets_used = 0;
  std::size_t edges = 0;
  std::vector<std::string> warnings;
};

struct BuildResult {
  GraphDataset dataset;
  BuildStats stats;
};

/// Builds the graph of one news item. `tweets` must all carry `news_id`.
/// `missing_timelines` is incremented for every tweet node without timeline data.
PropagationGraph build_news_graph(const Id& news_id, Label label, std::vector<TweetRecord> tweets,
                                  const UserMap& users, const TimelineMap* timelines,
                                  const BuildOptions& options, std::size_t& missing_timelines);

/// Builds every labeled news item, ordered by news_id. Data errors skip the item
/// (recorded in stats) unless `options.strict`.
BuildResult build_dataset(const RawCorpus& corpus, const BuildOptions& options);

struct DatasetSummary {
  double mean_nodes = 0.0;
  double mean_edges = 0.0;
  std::size_t real = 0;
  std::size_t fake = 0;
  std::size_t max_nodes = 0;
};

DatasetSummary summarize(const GraphDataset& dataset);

}  // namespace cascadecl
