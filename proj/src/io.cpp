#include "cascadecl/io.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cascadecl/error.hpp"

namespace cascadecl {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

namespace {

[[noreturn]] void parse_fail(const fs::path& path, std::size_t line, const std::string& why) {
  throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": " + why);
}

// Calls fn(json, line_number) for every non-blank line.
template <typename Fn>
void for_each_jsonl(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      parse_fail(path, lineno, e.what());
    }
    if (!j.is_object()) parse_fail(path, lineno, "expected a JSON object");
    try {
      fn(j, lineno);
    } catch (const json::exception& e) {
      parse_fail(path, lineno, e.what());
    }
  }
}

Id id_field(const json& j, const char* key, const fs::path& path, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) parse_fail(path, line, std::string("missing field '") + key + "'");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  parse_fail(path, line, std::string("field '") + key + "' must be a string or integer id");
}

std::int64_t count_field(const json& j, const char* key, const fs::path& path, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return 0;
  if (!it->is_number()) parse_fail(path, line, std::string("field '") + key + "' must be numeric");
  const auto v = it->get<std::int64_t>();
  if (v < 0) parse_fail(path, line, std::string("field '") + key + "' must be non-negative");
  return v;
}

std::set<Id> id_set(const json& j, const char* key, const fs::path& path, std::size_t line) {
  std::set<Id> out;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) parse_fail(path, line, std::string("field '") + key + "' must be an array");
  for (const auto& v : *it) {
    if (v.is_string()) out.insert(v.get<std::string>());
    else if (v.is_number_integer()) out.insert(std::to_string(v.get<std::int64_t>()));
    else parse_fail(path, line, std::string("field '") + key + "' holds a non-id value");
  }
  return out;
}

std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(std::string_view bytes, const char* what) : bytes_(bytes), what_(what) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::ParseError, std::string(what_) + " is truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
  const char* what_;
};

}  // namespace

std::int64_t parse_iso8601(std::string_view text) {
  int y, mo, d, h = 0, mi = 0, s = 0;
  const std::string str(text);
  int consumed = 0;
  if (std::sscanf(str.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) != 3 || consumed != 10) {
    throw Error(ErrorCode::ParseError, "bad ISO-8601 date '" + str + "'");
  }
  std::size_t pos = 10;
  if (pos < str.size() && (str[pos] == 'T' || str[pos] == ' ')) {
    if (std::sscanf(str.c_str() + pos + 1, "%2d:%2d:%2d%n", &h, &mi, &s, &consumed) != 3 || consumed != 8) {
      throw Error(ErrorCode::ParseError, "bad ISO-8601 time '" + str + "'");
    }
    pos += 9;
    if (pos < str.size() && str[pos] == '.') {
      ++pos;
      while (pos < str.size() && std::isdigit(static_cast<unsigned char>(str[pos]))) ++pos;
    }
  }
  std::int64_t offset = 0;
  if (pos < str.size()) {
    if (str[pos] == 'Z') {
      ++pos;
    } else if (str[pos] == '+' || str[pos] == '-') {
      int oh = 0, om = 0;
      if (std::sscanf(str.c_str() + pos + 1, "%2d:%2d", &oh, &om) < 1) {
        throw Error(ErrorCode::ParseError, "bad ISO-8601 offset '" + str + "'");
      }
      offset = (str[pos] == '+' ? 1 : -1) * (oh * 3600 + om * 60);
      pos = str.size();
    }
  }
  if (pos != str.size() || mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) {
    throw Error(ErrorCode::ParseError, "bad ISO-8601 timestamp '" + str + "'");
  }
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 + h * 3600 +
         mi * 60 + s - offset;
}

std::vector<TweetRecord> read_tweets_jsonl(const fs::path& path) {
  std::vector<TweetRecord> out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    TweetRecord t;
    t.tweet_id = id_field(j, "tweet_id", path, line);
    t.news_id = id_field(j, "news_id", path, line);
    t.user_id = id_field(j, "user_id", path, line);
    const json* ts = nullptr;
    if (j.contains("timestamp_s")) ts = &j["timestamp_s"];
    else if (j.contains("timestamp")) ts = &j["timestamp"];
    if (ts == nullptr) parse_fail(path, line, "missing field 'timestamp_s'");
    if (ts->is_number()) t.timestamp_s = ts->get<std::int64_t>();
    else if (ts->is_string()) t.timestamp_s = parse_iso8601(ts->get<std::string>());
    else parse_fail(path, line, "timestamp must be epoch seconds or ISO-8601");
    if (t.timestamp_s < 0) parse_fail(path, line, "timestamp must be non-negative");
    if (j.contains("root_tweet_id") && !j["root_tweet_id"].is_null()) {
      t.root_tweet_id = id_field(j, "root_tweet_id", path, line);
    }
    t.mentioned_user_ids = id_set(j, "mentioned_user_ids", path, line);
    t.is_public = j.value("is_public", true);
    out.push_back(std::move(t));
  });
  return out;
}

UserMap read_users_jsonl(const fs::path& path) {
  UserMap out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    UserProfile u;
    u.user_id = id_field(j, "user_id", path, line);
    u.verified = j.value("verified", false);
    if (j.contains("created_months")) {
      u.created_months = count_field(j, "created_months", path, line);
    } else if (j.contains("created_at")) {
      const std::int64_t secs = parse_iso8601(j["created_at"].get<std::string>());
      const std::int64_t days = secs / 86400;
      // civil year/month back from days
      std::int64_t z = days + 719468;
      const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
      const auto doe = static_cast<unsigned>(z - era * 146097);
      const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
      const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
      const unsigned mp = (5 * doy + 2) / 153;
      const unsigned m = mp < 10 ? mp + 3 : mp - 9;
      const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2);
      u.created_months = std::max<std::int64_t>(0, (y - 2006) * 12 + (static_cast<std::int64_t>(m) - 3));
    }
    u.followers = count_field(j, "followers", path, line);
    u.friends = count_field(j, "friends", path, line);
    u.lists = count_field(j, "lists", path, line);
    u.favourites = count_field(j, "favourites", path, line);
    u.statuses = count_field(j, "statuses", path, line);
    u.follows = id_set(j, "follows", path, line);
    const Id key = u.user_id;
    out.insert_or_assign(key, std::move(u));
  });
  return out;
}

TimelineMap read_timelines_jsonl(const fs::path& path) {
  TimelineMap out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    const Id user = id_field(j, "user_id", path, line);
    Timeline t;
    if (j.contains("mentions")) {
      if (!j["mentions"].is_array()) parse_fail(path, line, "'mentions' must be an array of arrays");
      for (const auto& tweet : j["mentions"]) {
        std::vector<Id> ids;
        if (!tweet.is_array()) parse_fail(path, line, "'mentions' entries must be arrays");
        for (const auto& v : tweet) {
          ids.push_back(v.is_string() ? v.get<std::string>() : std::to_string(v.get<std::int64_t>()));
        }
        t.mentions.push_back(std::move(ids));
      }
    }
    t.tweet_count = j.contains("tweet_count")
                        ? static_cast<std::size_t>(count_field(j, "tweet_count", path, line))
                        : t.mentions.size();
    out.insert_or_assign(user, std::move(t));
  });
  return out;
}

std::map<Id, Label> read_labels_jsonl(const fs::path& path) {
  std::map<Id, Label> out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    const Id news = id_field(j, "news_id", path, line);
    if (!j.contains("label")) parse_fail(path, line, "missing field 'label'");
    const json& l = j["label"];
    Label label;
    if (l.is_number_integer() && (l.get<int>() == 0 || l.get<int>() == 1)) {
      label = l.get<int>() == 1 ? Label::Fake : Label::Real;
    } else if (l.is_string() && (l.get<std::string>() == "fake" || l.get<std::string>() == "real")) {
      label = l.get<std::string>() == "fake" ? Label::Fake : Label::Real;
    } else {
      parse_fail(path, line, "label must be 0/1 or \"real\"/\"fake\"");
    }
    out[news] = label;
  });
  return out;
}

RawCorpus read_corpus(const fs::path& tweets, const fs::path& users,
                      const std::optional<fs::path>& timelines, const fs::path& labels) {
  RawCorpus c;
  c.tweets = read_tweets_jsonl(tweets);
  c.users = read_users_jsonl(users);
  if (timelines) c.timelines = read_timelines_jsonl(*timelines);
  c.labels = read_labels_jsonl(labels);
  return c;
}

json to_json(const TweetRecord& t) {
  json j = {{"tweet_id", t.tweet_id},
            {"news_id", t.news_id},
            {"user_id", t.user_id},
            {"timestamp_s", t.timestamp_s},
            {"root_tweet_id", t.root_tweet_id ? json(*t.root_tweet_id) : json(nullptr)},
            {"mentioned_user_ids", t.mentioned_user_ids},
            {"is_public", t.is_public}};
  return j;
}

json to_json(const UserProfile& u) {
  return json{{"user_id", u.user_id},       {"verified", u.verified},   {"created_months", u.created_months},
              {"followers", u.followers},   {"friends", u.friends},     {"lists", u.lists},
              {"favourites", u.favourites}, {"statuses", u.statuses},   {"follows", u.follows}};
}

void write_corpus(const fs::path& dir, const RawCorpus& corpus) {
  fs::create_directories(dir);
  std::string tweets;
  for (const auto& t : corpus.tweets) tweets += to_json(t).dump() + "\n";
  atomic_write(dir / "tweets.jsonl", tweets);

  std::map<Id, const UserProfile*> ordered;
  for (const auto& [id, u] : corpus.users) ordered.emplace(id, &u);
  std::string users;
  for (const auto& [_, u] : ordered) users += to_json(*u).dump() + "\n";
  atomic_write(dir / "users.jsonl", users);

  if (corpus.timelines) {
    std::string tl;
    for (const auto& [id, t] : *corpus.timelines) {
      tl += json{{"user_id", id}, {"mentions", t.mentions}, {"tweet_count", t.tweet_count}}.dump() + "\n";
    }
    atomic_write(dir / "timelines.jsonl", tl);
  }

  std::string labels;
  for (const auto& [id, l] : corpus.labels) {
    labels += json{{"news_id", id}, {"label", l == Label::Fake ? 1 : 0}}.dump() + "\n";
  }
  atomic_write(dir / "labels.jsonl", labels);
}

void atomic_write(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string encode_graphs(const GraphDataset& dataset) {
  std::string out(kGraphMagic, 4);
  const std::size_t d = dataset.dim();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  put<std::uint64_t>(out, dataset.graphs.size());
  for (const auto& g : dataset.graphs) {
    if (g.features.cols != d || g.features.rows != g.n) {
      throw Error(ErrorCode::DimensionMismatch, "graph '" + g.news_id + "' does not match dataset width");
    }
    put<std::uint64_t>(out, g.n);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(g.label));
    put<std::uint64_t>(out, g.edges.size());
    for (const auto& [src, dst] : g.edges) {
      put<std::uint32_t>(out, src);
      put<std::uint32_t>(out, dst);
    }
    for (double v : g.features.data) put<double>(out, v);
  }
  return out;
}

GraphDataset decode_graphs(std::string_view bytes, FeatureMode mode) {
  Reader r(bytes, "graphs.bin");
  if (r.take(4) != std::string_view(kGraphMagic, 4)) {
    throw Error(ErrorCode::ParseError, "graphs.bin: bad magic (expected PGV1)");
  }
  GraphDataset ds;
  ds.mode = mode;
  const auto d = r.get<std::uint32_t>();
  if (d != ds.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "graphs.bin width " + std::to_string(d) +
                                                  " disagrees with feature mode " +
                                                  std::string(to_string(mode)));
  }
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t k = 0; k < count; ++k) {
    PropagationGraph g;
    g.n = r.get<std::uint64_t>();
    const auto label = r.get<std::uint8_t>();
    if (label > 1) throw Error(ErrorCode::ParseError, "graphs.bin: label out of range");
    g.label = static_cast<Label>(label);
    const auto m = r.get<std::uint64_t>();
    for (std::uint64_t e = 0; e < m; ++e) {
      const auto src = r.get<std::uint32_t>();
      const auto dst = r.get<std::uint32_t>();
      if (src >= g.n || dst >= g.n) throw Error(ErrorCode::ParseError, "graphs.bin: edge out of range");
      g.edges.emplace(src, dst);
    }
    g.features = FeatureMatrix(g.n, d);
    for (auto& v : g.features.data) v = r.get<double>();
    ds.graphs.push_back(std::move(g));
  }
  if (!r.done()) throw Error(ErrorCode::ParseError, "graphs.bin: trailing bytes");
  return ds;
}

json to_json(const NormStats& stats) {
  return json{{"mean", stats.mean}, {"stddev", stats.stddev}, {"exempt", stats.exempt}};
}

NormStats norm_stats_from_json(const json& j) {
  NormStats s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stddev = j.at("stddev").get<std::vector<double>>();
  s.exempt = j.at("exempt").get<std::vector<bool>>();
  if (s.stddev.size() != s.mean.size() || s.exempt.size() != s.mean.size()) {
    throw Error(ErrorCode::ParseError, "normalization stats have inconsistent lengths");
  }
  return s;
}

json to_json(const ClipSpec& clip) {
  return json{{"max_tweets", clip.max_tweets ? json(*clip.max_tweets) : json(nullptr)},
              {"max_hours", clip.max_hours ? json(*clip.max_hours) : json(nullptr)}};
}

json to_json(const BuildStats& s) {
  return json{{"news_seen", s.news_seen},
              {"graphs", s.graphs},
              {"dropped_empty", s.dropped_empty},
              {"dropped_orphan", s.dropped_orphan},
              {"dropped_unknown_user", s.dropped_unknown_user},
              {"dropped_unlabeled", s.dropped_unlabeled},
              {"missing_timelines", s.missing_timelines},
              {"tweets_used", s.tweets_used},
              {"edges", s.edges}};
}

void write_archive(const fs::path& dir, const GraphDataset& dataset, json manifest) {
  fs::create_directories(dir);
  atomic_write(dir / "graphs.bin", encode_graphs(dataset));
  const DatasetSummary summary = summarize(dataset);
  std::vector<std::string> ids;
  for (const auto& g : dataset.graphs) ids.push_back(g.news_id);
  manifest["format"] = "PGV1";
  manifest["version"] = 1;
  manifest["graphs"] = dataset.graphs.size();
  manifest["dim"] = dataset.dim();
  manifest["feature_mode"] = std::string(to_string(dataset.mode));
  manifest["labels"] = {{"real", summary.real}, {"fake", summary.fake}};
  manifest["mean_nodes"] = summary.mean_nodes;
  manifest["mean_edges"] = summary.mean_edges;
  manifest["max_nodes"] = summary.max_nodes;
  manifest["news_ids"] = ids;
  atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

Archive read_archive(const fs::path& dir) {
  Archive a;
  try {
    a.manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, (dir / "manifest.json").string() + ": " + e.what());
  }
  const FeatureMode mode = parse_feature_mode(a.manifest.value("feature_mode", "profile"));
  a.dataset = decode_graphs(read_file(dir / "graphs.bin"), mode);
  if (a.manifest.contains("news_ids")) {
    const auto ids = a.manifest["news_ids"].get<std::vector<std::string>>();
    if (ids.size() == a.dataset.graphs.size()) {
      for (std::size_t i = 0; i < ids.size(); ++i) a.dataset.graphs[i].news_id = ids[i];
    }
  }
  return a;
}

json to_json(const ModelConfig& c) {
  return json{{"pool_layers", c.pool_layers},
              {"hidden_dim", c.hidden_dim},
              {"embed_dim", c.embed_dim},
              {"pool_ratio", c.pool_ratio},
              {"input_dim", c.input_dim},
              {"max_nodes", c.max_nodes},
              {"aux_link_weight", c.aux_link_weight},
              {"aux_entropy_weight", c.aux_entropy_weight},
              {"directed", c.directed},
              {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.pool_layers = j.at("pool_layers").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.pool_ratio = j.at("pool_ratio").get<double>();
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.max_nodes = j.at("max_nodes").get<std::size_t>();
  c.aux_link_weight = j.at("aux_link_weight").get<double>();
  c.aux_entropy_weight = j.at("aux_entropy_weight").get<double>();
  c.directed = j.at("directed").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kCheckpointMagic, 4);
  put<std::uint32_t>(out, 1);
  json header = {{"config", to_json(ckpt.config)}, {"meta", ckpt.meta}};
  if (ckpt.norm) header["norm"] = to_json(*ckpt.norm);
  const std::string h = header.dump();
  put<std::uint64_t>(out, h.size());
  out += h;
  put<std::uint64_t>(out, ckpt.params.size());
  for (double v : ckpt.params) put<double>(out, v);
  put<std::uint64_t>(out, ckpt.optimizer.step);
  put<std::uint64_t>(out, ckpt.optimizer.m.size());
  for (double v : ckpt.optimizer.m) put<double>(out, v);
  for (double v : ckpt.optimizer.v) put<double>(out, v);
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes, "checkpoint");
  if (r.take(4) != std::string_view(kCheckpointMagic, 4)) {
    throw Error(ErrorCode::IncompatibleCheckpoint, "not a checkpoint file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != 1) {
    throw Error(ErrorCode::IncompatibleCheckpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  const auto hlen = r.get<std::uint64_t>();
  json header;
  try {
    header = json::parse(r.take(hlen));
    c.config = model_config_from_json(header.at("config"));
    c.meta = header.value("meta", json::object());
    if (header.contains("norm")) c.norm = norm_stats_from_json(header["norm"]);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint header: ") + e.what());
  }
  c.params.resize(r.get<std::uint64_t>());
  for (auto& v : c.params) v = r.get<double>();
  c.optimizer.step = r.get<std::uint64_t>();
  const auto mlen = r.get<std::uint64_t>();
  c.optimizer.m.resize(mlen);
  c.optimizer.v.resize(mlen);
  for (auto& v : c.optimizer.m) v = r.get<double>();
  for (auto& v : c.optimizer.v) v = r.get<double>();
  if (!r.done()) throw Error(ErrorCode::ParseError, "checkpoint: trailing bytes");
  const DiffPoolModel probe(c.config);
  if (probe.params().size() != c.params.size()) {
    throw Error(ErrorCode::IncompatibleCheckpoint,
                "checkpoint carries " + std::to_string(c.params.size()) +
                    " parameters, its architecture needs " + std::to_string(probe.params().size()));
  }
  return c;
}

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  atomic_write(path, encode_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const fs::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace cascadecl
