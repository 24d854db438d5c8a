#pragma once

// File formats: line-delimited JSON inputs, graph archives, checkpoints.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cascadecl/dataset.hpp"
#include "cascadecl/gnn.hpp"
#include "cascadecl/params.hpp"

#include <json.hpp>

namespace cascadecl {

namespace fs = std::filesystem;

/// Epoch seconds from an ISO-8601 timestamp ("2018-05-01T12:30:00Z", offsets allowed).
std::int64_t parse_iso8601(std::string_view text);

std::vector<TweetRecord> read_tweets_jsonl(const fs::path& path);
UserMap read_users_jsonl(const fs::path& path);
TimelineMap read_timelines_jsonl(const fs::path& path);
std::map<Id, Label> read_labels_jsonl(const fs::path& path);

RawCorpus read_corpus(const fs::path& tweets, const fs::path& users,
                      const std::optional<fs::path>& timelines, const fs::path& labels);

nlohmann::json to_json(const TweetRecord& t);
nlohmann::json to_json(const UserProfile& u);
void write_corpus(const fs::path& dir, const RawCorpus& corpus);

/// Writes `bytes` to a sibling temp file, then renames over `path`.
void atomic_write(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

inline constexpr char kGraphMagic[4] = {'P', 'G', 'V', '1'};

std::string encode_graphs(const GraphDataset& dataset);
GraphDataset decode_graphs(std::string_view bytes, FeatureMode mode);

nlohmann::json to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClipSpec& clip);
nlohmann::json to_json(const BuildStats& stats);

/// Writes graphs.bin + manifest.json into `dir`; `extra` is merged into the manifest.
void write_archive(const fs::path& dir, const GraphDataset& dataset, nlohmann::json manifest);

struct Archive {
  GraphDataset dataset;
  nlohmann::json manifest;
};

Archive read_archive(const fs::path& dir);

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

inline constexpr char kCheckpointMagic[4] = {'C', 'K', 'P', '1'};

struct Checkpoint {
  ModelConfig config;
  std::vector<double> params;
  AdamState optimizer;
  std::optional<NormStats> norm;
  nlohmann::json meta = nlohmann::json::object();
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void write_checkpoint(const fs::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const fs::path& path);

}  // namespace cascadecl
