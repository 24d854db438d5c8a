// cascadecl: build propagation-graph datasets, train and evaluate the pooling
// classifier, run incremental scenarios and merge reports.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cascadecl/continual.hpp"
#include "cascadecl/dataset.hpp"
#include "cascadecl/error.hpp"
#include "cascadecl/harness.hpp"
#include "cascadecl/io.hpp"
#include "cascadecl/synth.hpp"

namespace fs = std::filesystem;
using namespace cascadecl;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitIncompatible = 4;

void log(const std::string& msg) { std::cerr << "cascadecl: " << msg << '\n'; }

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return kExitConfig;
    case ErrorCode::IncompatibleCheckpoint:
    case ErrorCode::ArchitectureMismatch:
    case ErrorCode::DimensionMismatch: return kExitIncompatible;
    default: return kExitData;
  }
}

struct Common {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string config;

  std::uint64_t resolved_seed() const {
    if (seed) return *seed;
    if (const char* env = std::getenv("CASCADECL_SEED"); env && *env) {
      try {
        std::size_t pos = 0;
        const auto v = std::stoull(env, &pos);
        if (pos == std::string(env).size()) return v;
      } catch (const std::exception&) {
      }
      throw Error(ErrorCode::InvalidConfig, std::string("CASCADECL_SEED is not an integer: ") + env);
    }
    return 0;
  }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Base seed (falls back to $CASCADECL_SEED, then 0)");
  sub->add_option("--jobs", c.jobs, "Worker threads for independent repeats")->capture_default_str()->check(
      CLI::PositiveNumber);
  sub->add_option("--config", c.config, "Flat key = value file; keys are long flag names");
}

/// Fills options not given on the command line from a flat key = value file.
void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key == "config") throw Error(ErrorCode::InvalidConfig, path + ": config files cannot nest");
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw Error(ErrorCode::InvalidConfig,
                  path + ":" + std::to_string(lineno) + ": unknown key '" + key + "' for " + sub->get_name());
    }
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw Error(ErrorCode::InvalidConfig, path + ":" + std::to_string(lineno) + ": " + key + ": " + e.what());
    }
  }
}

struct ModelOpts {
  ModelConfig model;
  TrainConfig train;
  std::size_t repeats = 5;
  double train_frac = 0.75;
  bool no_normalize = false;
};

void add_model_opts(CLI::App* sub, ModelOpts& m) {
  sub->add_option("--pool-layers", m.model.pool_layers, "Pooling levels (2-4)")->capture_default_str();
  sub->add_option("--hidden", m.model.hidden_dim, "Hidden width (16-128)")->capture_default_str();
  sub->add_option("--embed", m.model.embed_dim, "Embedding width (16-128)")->capture_default_str();
  sub->add_option("--pool-ratio", m.model.pool_ratio, "Cluster ratio per level")->capture_default_str();
  sub->add_option("--aux-link", m.model.aux_link_weight, "Link-prediction loss weight")->capture_default_str();
  sub->add_option("--aux-entropy", m.model.aux_entropy_weight, "Assignment entropy loss weight")
      ->capture_default_str();
  sub->add_flag("--directed", m.model.directed, "Keep edge direction in message passing");
  sub->add_option("--epochs", m.train.epochs, "Epoch budget")->capture_default_str();
  sub->add_option("--patience", m.train.patience, "Early-stopping patience on training loss (0 = off)")
      ->capture_default_str();
  sub->add_option("--batch-size", m.train.batch_size, "Mini-batch size")->capture_default_str();
  sub->add_option("--lr", m.train.adam.lr, "Adam learning rate")->capture_default_str();
  sub->add_option("--repeats", m.repeats, "Independent split/train repeats")->capture_default_str();
  sub->add_option("--train-frac", m.train_frac, "Training share of each split")->capture_default_str();
  sub->add_flag("--no-normalize", m.no_normalize, "Skip z-scoring of node features");
}

ExperimentSpec make_spec(const ModelOpts& m, const Common& c) {
  ExperimentSpec spec;
  spec.model = m.model;
  spec.train = m.train;
  spec.repeats = m.repeats;
  spec.train_frac = m.train_frac;
  spec.normalize = !m.no_normalize;
  spec.seed = c.resolved_seed();
  spec.jobs = c.jobs;
  spec.validate();
  return spec;
}

std::optional<ClipSpec> clip_from(std::optional<std::size_t> tweets, std::optional<double> hours) {
  ClipSpec c;
  c.max_tweets = tweets;
  c.max_hours = hours;
  if (c.max_tweets && *c.max_tweets == 0) throw Error(ErrorCode::InvalidConfig, "--clip-tweets must be >= 1");
  if (c.max_hours && !(*c.max_hours > 0.0)) throw Error(ErrorCode::InvalidConfig, "--clip-hours must be positive");
  return c;
}

/// "100", "5h" or "100:5h".
ClipSpec parse_clip(const std::string& text) {
  ClipSpec c;
  if (text == "full") return c;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto colon = text.find(':', start);
    const std::string part = text.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
    try {
      std::size_t pos = 0;
      if (!part.empty() && part.back() == 'h') {
        c.max_hours = std::stod(part.substr(0, part.size() - 1), &pos);
        if (pos != part.size() - 1 || !(*c.max_hours > 0.0)) throw std::invalid_argument(part);
      } else {
        c.max_tweets = std::stoull(part, &pos);
        if (pos != part.size() || *c.max_tweets == 0) throw std::invalid_argument(part);
      }
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "bad clip spec '" + text + "' (use N, Hh or N:Hh)");
    }
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  return c;
}

void write_json(const fs::path& path, const json& j) { atomic_write(path, j.dump(2) + "\n"); }

void write_reports(const fs::path& out, const std::vector<ExperimentReport>& reports) {
  fs::create_directories(out);
  json j;
  if (reports.size() == 1) {
    j = to_json(reports.front());
  } else {
    j = {{"reports", json::array()}};
    for (const auto& r : reports) j["reports"].push_back(to_json(r));
  }
  write_json(out / "report.json", j);
  atomic_write(out / "report.csv", report_csv(reports));
  atomic_write(out / "plot.csv", plot_csv(reports));
  bool has_history = false;
  for (const auto& r : reports) has_history = has_history || !r.histories.empty();
  if (has_history) atomic_write(out / "history.csv", history_csv(reports));
}

void save_model(const fs::path& out, const ExperimentReport& r, const std::string& feature_mode, double train_frac) {
  if (!r.model) return;
  Checkpoint ck;
  ck.config = r.model->config;
  ck.params = r.model->params;
  ck.norm = r.model->norm;
  ck.meta = {{"split_seed", r.model->split_seed}, {"train_frac", train_frac}, {"feature_mode", feature_mode},
             {"kind", r.kind}};
  write_checkpoint(out / "model.ckpt", ck);
  if (ck.norm) write_json(out / "norm.json", to_json(*ck.norm));
}

bool is_raw_corpus(const fs::path& dir) { return fs::exists(dir / "tweets.jsonl"); }

RawCorpus read_corpus_dir(const fs::path& dir) {
  const fs::path tl = dir / "timelines.jsonl";
  return read_corpus(dir / "tweets.jsonl", dir / "users.jsonl",
                     fs::exists(tl) ? std::optional<fs::path>(tl) : std::nullopt, dir / "labels.jsonl");
}

std::string dataset_name(const fs::path& p) {
  const fs::path clean = p.has_filename() ? p : p.parent_path();
  return clean.filename().string().empty() ? "data" : clean.filename().string();
}

// ---------------------------------------------------------------- build

struct BuildArgs {
  std::string tweets, users, timelines, labels, out;
  std::string features = "profile";
  std::optional<std::size_t> clip_tweets;
  std::optional<double> clip_hours;
  double window_hours = 5.0;
  bool use_follow = false;
  bool strict = false;
};

json build_manifest_extra(const BuildResult& built, const BuildOptions& opts) {
  return {{"build", to_json(built.stats)},
          {"clip", to_json(opts.clip)},
          {"edge_rules", {{"time_window_h", opts.rules.time_window_h}, {"use_follow", opts.rules.use_follow}}}};
}

int cmd_build(const BuildArgs& a) {
  BuildOptions opts;
  opts.mode = parse_feature_mode(a.features);
  opts.clip = *clip_from(a.clip_tweets, a.clip_hours);
  if (!(a.window_hours >= 0.0)) throw Error(ErrorCode::InvalidConfig, "--window-hours must be >= 0");
  opts.rules.time_window_h = a.window_hours;
  opts.rules.use_follow = a.use_follow;
  opts.strict = a.strict;

  const RawCorpus corpus =
      read_corpus(a.tweets, a.users, a.timelines.empty() ? std::nullopt : std::optional<fs::path>(a.timelines),
                  a.labels);
  if (corpus.tweets.empty()) throw Error(ErrorCode::EmptyInput, "no news items in " + a.tweets);
  BuildResult built = build_dataset(corpus, opts);
  for (const auto& w : built.stats.warnings) log("warning: " + w);
  if (built.dataset.graphs.empty()) throw Error(ErrorCode::EmptyResult, "no news items survived the build");
  write_archive(a.out, built.dataset, build_manifest_extra(built, opts));
  const DatasetSummary s = summarize(built.dataset);
  log("built " + std::to_string(built.dataset.graphs.size()) + " graphs (" + std::to_string(s.real) + " real, " +
      std::to_string(s.fake) + " fake), mean nodes " + std::to_string(s.mean_nodes) + " -> " + a.out);
  return 0;
}

// ---------------------------------------------------------------- gen-synth

struct GenArgs {
  std::string out;
  std::size_t n_news = 400;
  std::string features = "profile";
  bool no_timelines = false;
};

int cmd_gen(const GenArgs& a, const Common& c) {
  auto [ra, rb] = default_regimes();
  if (c.seed || std::getenv("CASCADECL_SEED")) {
    const std::uint64_t s = c.resolved_seed();
    ra.seed = mix_seed(s, 'A');
    rb.seed = mix_seed(s, 'B');
  }
  BuildOptions opts;
  opts.mode = parse_feature_mode(a.features);
  for (RegimeConfig* r : {&ra, &rb}) {
    r->n_news = a.n_news;
    r->timelines = !a.no_timelines;
    if (opts.mode != FeatureMode::ProfileOnly && !r->timelines) {
      throw Error(ErrorCode::InvalidConfig, "timeline features need generated timelines");
    }
    const SynthDataset sd = generate(*r, opts);
    const fs::path dir = fs::path(a.out) / r->name;
    fs::create_directories(dir);
    write_corpus(dir, sd.corpus);
    json extra = {{"build", to_json(sd.manifest.build)}, {"regime", r->name}};
    write_archive(dir, sd.dataset, extra);
    write_json(dir / "gen-manifest.json", to_json(sd.manifest));
    log("regime " + r->name + ": " + std::to_string(sd.dataset.graphs.size()) + " graphs, mean nodes " +
        std::to_string(sd.manifest.realized.mean_nodes) + ", mean edges " +
        std::to_string(sd.manifest.realized.mean_edges) + " -> " + dir.string());
  }
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data, out;
  std::vector<std::string> clip_sweep;
  std::string features = "profile";
};

int cmd_train(const TrainArgs& a, const ModelOpts& m, const Common& c) {
  const ExperimentSpec spec = make_spec(m, c);
  const fs::path out = a.out;
  if (!a.clip_sweep.empty()) {
    if (!is_raw_corpus(a.data)) {
      throw Error(ErrorCode::InvalidConfig, "--clip-sweep needs a raw corpus directory (tweets.jsonl, ...)");
    }
    std::vector<ClipSpec> clips;
    for (const auto& s : a.clip_sweep) clips.push_back(parse_clip(s));
    BuildOptions base;
    base.mode = parse_feature_mode(a.features);
    const RawCorpus corpus = read_corpus_dir(a.data);
    if (corpus.tweets.empty()) throw Error(ErrorCode::EmptyInput, "no news items in " + a.data);
    auto reports = clip_sweep(spec, corpus, base, clips, dataset_name(a.data));
    for (auto& r : reports) r.model.reset();
    write_reports(out, reports);
    log("clip sweep of " + std::to_string(reports.size()) + " settings -> " + out.string());
    return 0;
  }

  GraphDataset ds;
  if (!fs::exists(fs::path(a.data) / "graphs.bin") && is_raw_corpus(a.data)) {
    BuildOptions base;
    base.mode = parse_feature_mode(a.features);
    ds = build_dataset(read_corpus_dir(a.data), base).dataset;
  } else {
    ds = read_archive(a.data).dataset;
  }
  if (ds.graphs.empty()) throw Error(ErrorCode::EmptyResult, "no news items in " + a.data);
  ExperimentReport r = run_single(spec, ds, dataset_name(a.data));
  write_reports(out, {r});
  save_model(out, r, std::string(to_string(ds.mode)), spec.train_frac);
  const auto& s = r.summary.front();
  log("mean test accuracy " + std::to_string(s.mean.accuracy) + " over " + std::to_string(s.count) +
      " repeats -> " + out.string());
  return 0;
}

// ---------------------------------------------------------------- train-incremental

struct IncArgs {
  std::string data1, data2, out, checkpoint;
  std::vector<std::string> methods{"naive"};
  std::vector<std::size_t> mem_sizes{100};
  std::vector<double> lambdas{1e3};
  std::size_t fisher_samples = 100;
  std::string fisher_labels = "sampled";
  std::size_t ewc_patience = 5;
  bool gem_rollback = false;
  double val_frac = 0.1;
};

std::string number_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

int cmd_incremental(const IncArgs& a, ModelOpts m, const Common& c) {
  const Archive a1 = read_archive(a.data1);
  const Archive a2 = read_archive(a.data2);
  if (!a.checkpoint.empty()) {
    const Checkpoint ck = read_checkpoint(a.checkpoint);
    for (const Archive* ar : {&a1, &a2}) {
      if (ck.config.input_dim != ar->dataset.dim()) {
        throw Error(ErrorCode::IncompatibleCheckpoint,
                    "checkpoint expects feature dimension " + std::to_string(ck.config.input_dim) +
                        ", archive has " + std::to_string(ar->dataset.dim()));
      }
    }
    const std::size_t seed = m.model.seed;
    m.model = ck.config;
    m.model.seed = seed;
  }
  ExperimentSpec spec = make_spec(m, c);
  spec.scenario = "incremental";
  spec.val_frac = a.val_frac;
  spec.validate();

  FisherLabels fl;
  if (a.fisher_labels == "sampled") fl = FisherLabels::Sampled;
  else if (a.fisher_labels == "empirical") fl = FisherLabels::Empirical;
  else throw Error(ErrorCode::InvalidConfig, "--fisher-labels must be sampled or empirical");

  std::vector<Variant> variants;
  IncrementalParams base;
  base.train = spec.train;
  base.fisher_samples = a.fisher_samples;
  base.fisher_labels = fl;
  base.ewc_patience = a.ewc_patience;
  base.gem_rollback = a.gem_rollback;
  for (const auto& name : a.methods) {
    IncrementalParams p = base;
    p.method = parse_continual_method(name);
    switch (p.method) {
      case ContinualMethod::Naive: variants.push_back({"naive", p}); break;
      case ContinualMethod::Gem:
        for (auto ms : a.mem_sizes) {
          p.mem_size = ms;
          variants.push_back({"gem-m" + std::to_string(ms), p});
        }
        break;
      case ContinualMethod::Ewc:
        for (auto l : a.lambdas) {
          if (!(l >= 0.0)) throw Error(ErrorCode::InvalidConfig, "--lambda must be >= 0");
          p.lambda = l;
          variants.push_back({"ewc-l" + number_label(l), p});
        }
        break;
    }
  }

  ExperimentReport r = run_incremental(spec, a1.dataset, dataset_name(a.data1), a2.dataset,
                                       dataset_name(a.data2), variants);
  write_reports(a.out, {r});
  save_model(a.out, r, std::string(to_string(a2.dataset.mode)), spec.train_frac);
  for (const auto& s : r.summary) {
    log(s.scenario + " " + s.phase + " " + s.dataset + ": accuracy " + std::to_string(s.mean.accuracy));
  }
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint, data, out;
  std::string split = "test";
};

int cmd_eval(const EvalArgs& a) {
  const Checkpoint ck = read_checkpoint(a.checkpoint);
  Archive ar = read_archive(a.data);
  if (ck.config.input_dim != ar.dataset.dim()) {
    throw Error(ErrorCode::IncompatibleCheckpoint,
                "checkpoint expects feature dimension " + std::to_string(ck.config.input_dim) + ", archive has " +
                    std::to_string(ar.dataset.dim()));
  }
  if (ck.norm && ck.norm->dim() != ar.dataset.dim()) {
    throw Error(ErrorCode::IncompatibleCheckpoint, "checkpoint normalization has dimension " +
                                                       std::to_string(ck.norm->dim()) + ", archive has " +
                                                       std::to_string(ar.dataset.dim()));
  }
  DiffPoolModel model(ck.config);
  model.params().unflatten(ck.params);
  if (ck.norm) {
    for (auto& g : ar.dataset.graphs) apply_norm_stats(g.features, *ck.norm);
  }

  std::vector<std::size_t> idx;
  if (a.split == "all") {
    for (std::size_t i = 0; i < ar.dataset.graphs.size(); ++i) idx.push_back(i);
  } else if (a.split == "test") {
    std::vector<std::size_t> labels;
    for (const auto& g : ar.dataset.graphs) labels.push_back(static_cast<std::size_t>(g.label));
    const double frac = ck.meta.value("train_frac", 0.75);
    const std::uint64_t seed = ck.meta.value("split_seed", std::uint64_t{0});
    idx = stratified_split(labels, frac, seed).test;
  } else {
    throw Error(ErrorCode::InvalidConfig, "--split must be test or all");
  }
  GraphRefs graphs;
  for (auto i : idx) graphs.push_back(&ar.dataset.graphs[i]);
  const Metrics m = evaluate(model, graphs);
  const json j = {{"checkpoint", a.checkpoint},
                  {"data", a.data},
                  {"split", a.split},
                  {"graphs", graphs.size()},
                  {"accuracy", m.accuracy},
                  {"precision", m.precision},
                  {"recall", m.recall},
                  {"f1", m.f1}};
  write_json(a.out, j);
  log("accuracy " + std::to_string(m.accuracy) + " on " + std::to_string(graphs.size()) + " graphs -> " + a.out);
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  std::vector<ExperimentReport> reports;
  for (const auto& in : a.inputs) {
    fs::path p = in;
    if (fs::is_directory(p)) p /= "report.json";
    json j;
    try {
      j = json::parse(read_file(p));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, p.string() + ": " + e.what());
    }
    if (j.contains("reports")) {
      for (const auto& r : j.at("reports")) reports.push_back(report_from_json(r));
    } else {
      reports.push_back(report_from_json(j));
    }
  }
  const fs::path out = a.out;
  fs::create_directories(out);
  atomic_write(out / "report.csv", report_csv(reports));
  atomic_write(out / "plot.csv", plot_csv(reports));
  atomic_write(out / "history.csv", history_csv(reports));
  atomic_write(out / "table_metrics.csv", metrics_table_csv(reports));
  atomic_write(out / "table_lambda.csv", lambda_table_csv(reports));
  log("merged " + std::to_string(reports.size()) + " reports -> " + out.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fake-news classification from propagation graphs with continual learning"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  Common common;

  BuildArgs build;
  auto* sb = app.add_subcommand("build", "Build a graph dataset archive from JSONL records");
  sb->add_option("--tweets", build.tweets, "tweets.jsonl")->required();
  sb->add_option("--users", build.users, "users.jsonl")->required();
  sb->add_option("--timelines", build.timelines, "timelines.jsonl (needed for timeline features)");
  sb->add_option("--labels", build.labels, "labels.jsonl")->required();
  sb->add_option("--out", build.out, "Archive directory")->required();
  sb->add_option("--features", build.features, "profile | timeline | combined")->capture_default_str();
  sb->add_option("--clip-tweets", build.clip_tweets, "Keep the first N tweets per news item");
  sb->add_option("--clip-hours", build.clip_hours, "Keep tweets within H hours of the first");
  sb->add_option("--window-hours", build.window_hours, "Public-tweet edge time window")->capture_default_str();
  sb->add_flag("--use-follow", build.use_follow, "Add follower edges when follow data is present");
  sb->add_flag("--strict", build.strict, "Fail on the first bad news item instead of skipping it");
  add_common(sb, common);

  GenArgs gen;
  auto* sg = app.add_subcommand("gen-synth", "Generate the two synthetic regimes (records and archives)");
  sg->add_option("--out", gen.out, "Output directory (gets A/ and B/)")->required();
  sg->add_option("--n-news", gen.n_news, "News items per regime")->capture_default_str();
  sg->add_option("--features", gen.features, "profile | timeline | combined")->capture_default_str();
  sg->add_flag("--no-timelines", gen.no_timelines, "Do not emit timelines.jsonl");
  add_common(sg, common);

  TrainArgs train;
  ModelOpts train_model_opts;
  auto* st = app.add_subcommand("train", "Repeated split/train/evaluate on one dataset");
  st->add_option("--data", train.data, "Archive directory, or raw corpus directory")->required();
  st->add_option("--out", train.out, "Output directory")->required();
  st->add_option("--features", train.features, "Feature mode when --data is a raw corpus")->capture_default_str();
  st->add_option("--clip-sweep", train.clip_sweep, "Clip settings N, Hh or N:Hh (raw corpus only)")
      ->delimiter(',');
  add_model_opts(st, train_model_opts);
  add_common(st, common);

  IncArgs inc;
  ModelOpts inc_model_opts;
  auto* si = app.add_subcommand("train-incremental", "Train on one dataset, then continue on another");
  si->add_option("--data1", inc.data1, "First-task archive")->required();
  si->add_option("--data2", inc.data2, "Second-task archive")->required();
  si->add_option("--out", inc.out, "Output directory")->required();
  si->add_option("--checkpoint", inc.checkpoint, "Take the architecture from this checkpoint");
  si->add_option("--method", inc.methods, "naive | gem | ewc (comma list)")->delimiter(',')->capture_default_str();
  si->add_option("--mem-size", inc.mem_sizes, "GEM memory sizes (comma list)")->delimiter(',')
      ->capture_default_str();
  si->add_option("--lambda", inc.lambdas, "EWC weights (comma list)")->delimiter(',')->capture_default_str();
  si->add_option("--fisher-samples", inc.fisher_samples, "Graphs used for the Fisher estimate")
      ->capture_default_str();
  si->add_option("--fisher-labels", inc.fisher_labels, "sampled | empirical")->capture_default_str();
  si->add_option("--ewc-patience", inc.ewc_patience, "EWC early-stopping patience")->capture_default_str();
  si->add_flag("--gem-rollback", inc.gem_rollback, "Undo GEM steps that raise the memory loss");
  si->add_option("--val-frac", inc.val_frac, "Second-task validation hold-out")->capture_default_str();
  add_model_opts(si, inc_model_opts);
  add_common(si, common);

  EvalArgs ev;
  auto* se = app.add_subcommand("eval", "Evaluate a checkpoint on an archive");
  se->add_option("--checkpoint", ev.checkpoint, "model.ckpt")->required();
  se->add_option("--data", ev.data, "Archive directory")->required();
  se->add_option("--out", ev.out, "Metrics JSON file")->required();
  se->add_option("--split", ev.split, "test (the checkpoint's held-out split) | all")->capture_default_str();
  add_common(se, common);

  ReportArgs rep;
  auto* sr = app.add_subcommand("report", "Merge report.json files into CSV tables");
  sr->add_option("--inputs", rep.inputs, "report.json files or run directories")->required()->expected(1, -1);
  sr->add_option("--out", rep.out, "Output directory")->required();
  add_common(sr, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    apply_config(sub, common.config);
    if (sub == sb) return cmd_build(build);
    if (sub == sg) return cmd_gen(gen, common);
    if (sub == st) return cmd_train(train, train_model_opts, common);
    if (sub == si) return cmd_incremental(inc, inc_model_opts, common);
    if (sub == se) return cmd_eval(ev);
    if (sub == sr) return cmd_report(rep);
  } catch (const Error& e) {
    log(e.what());
    return exit_code(e.code());
  } catch (const CLI::Error& e) {
    log(e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    log(e.what());
    return kExitData;
  }
  return kExitConfig;
}
