#include "cascadecl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "cascadecl/error.hpp"
#include "cascadecl/io.hpp"

namespace cascadecl {

namespace {

using Clock = std::chrono::steady_clock;

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<std::size_t> labels_of(const GraphDataset& ds) {
  std::vector<std::size_t> out;
  out.reserve(ds.graphs.size());
  for (const auto& g : ds.graphs) out.push_back(static_cast<std::size_t>(g.label));
  return out;
}

/// Copy of `ds` normalized with statistics fitted on the `train` indices.
std::pair<GraphDataset, std::optional<NormStats>> prepared(const GraphDataset& ds,
                                                           std::span<const std::size_t> train,
                                                           bool normalize) {
  GraphDataset copy = ds;
  if (!normalize) return {std::move(copy), std::nullopt};
  std::vector<const FeatureMatrix*> fit;
  for (auto i : train) fit.push_back(&copy.graphs[i].features);
  NormStats stats = fit_norm_stats(fit, copy.mode);
  for (auto& g : copy.graphs) apply_norm_stats(g.features, stats);
  return {std::move(copy), std::move(stats)};
}

GraphRefs refs(const GraphDataset& ds, std::span<const std::size_t> idx) {
  GraphRefs out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(&ds.graphs[i]);
  return out;
}

std::size_t max_nodes_of(const GraphDataset& ds) {
  std::size_t m = 1;
  for (const auto& g : ds.graphs) m = std::max(m, g.n);
  return m;
}

nlohmann::json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

Metrics metrics_from(const nlohmann::json& j) {
  return Metrics{j.at("accuracy").get<double>(), j.at("precision").get<double>(),
                 j.at("recall").get<double>(), j.at("f1").get<double>()};
}

nlohmann::json spec_json(const ExperimentSpec& s) {
  return {{"model", to_json(s.model)},
          {"epochs", s.train.epochs},
          {"patience", s.train.patience},
          {"batch_size", s.train.batch_size},
          {"lr", s.train.adam.lr},
          {"repeats", s.repeats},
          {"train_frac", s.train_frac},
          {"val_frac", s.val_frac},
          {"normalize", s.normalize},
          {"split", "stratified"},
          {"seed", s.seed}};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string metric_cells(const Metrics& m) {
  return fmt(m.accuracy) + "," + fmt(m.precision) + "," + fmt(m.recall) + "," + fmt(m.f1);
}

/// First `k` items of a seeded shuffle of `idx`, and the rest.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> carve(std::span<const std::size_t> idx,
                                                                   double frac, std::uint64_t seed) {
  const auto k = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(idx.size())));
  const auto pick = sample_indices(idx.size(), std::min(k, idx.size()), seed);
  std::vector<bool> taken(idx.size(), false);
  std::vector<std::size_t> head, rest;
  for (auto p : pick) {
    taken[p] = true;
    head.push_back(idx[p]);
  }
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (!taken[i]) rest.push_back(idx[i]);
  }
  return {head, rest};
}

}  // namespace

void ExperimentSpec::validate() const {
  if (repeats < 1) throw Error(ErrorCode::InvalidConfig, "repeats must be >= 1");
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "train_frac must be in (0,1)");
  }
  if (!(val_frac >= 0.0 && val_frac < 1.0)) throw Error(ErrorCode::InvalidConfig, "val_frac must be in [0,1)");
  if (train.batch_size == 0) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  if (!(train.adam.lr > 0.0)) throw Error(ErrorCode::InvalidConfig, "lr must be positive");
}

std::uint64_t repeat_seed(std::uint64_t seed, std::size_t repeat) { return seed + repeat; }

std::vector<SummaryRow> summarize_rows(std::span<const ReportRow> rows) {
  std::vector<SummaryRow> out;
  std::vector<std::vector<Metrics>> groups;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
      return s.scenario == r.scenario && s.phase == r.phase && s.dataset == r.dataset;
    });
    if (it == out.end()) {
      out.push_back(SummaryRow{r.scenario, r.phase, r.dataset, 0, {}, {}});
      groups.emplace_back();
      it = out.end() - 1;
    }
    groups[static_cast<std::size_t>(it - out.begin())].push_back(r.metrics);
  }
  auto field = [](Metrics& m, int k) -> double& {
    switch (k) {
      case 0: return m.accuracy;
      case 1: return m.precision;
      case 2: return m.recall;
      default: return m.f1;
    }
  };
  for (std::size_t gi = 0; gi < out.size(); ++gi) {
    auto& ms = groups[gi];
    auto& s = out[gi];
    s.count = ms.size();
    const double n = static_cast<double>(ms.size());
    for (int k = 0; k < 4; ++k) {
      double sum = 0.0;
      for (auto& m : ms) sum += field(m, k);
      const double mean = sum / n;
      double sq = 0.0;
      for (auto& m : ms) sq += (field(m, k) - mean) * (field(m, k) - mean);
      field(s.mean, k) = mean;
      field(s.stddev, k) = ms.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
    }
  }
  return out;
}

ExperimentReport run_single(const ExperimentSpec& spec, const GraphDataset& dataset,
                            const std::string& dataset_name) {
  spec.validate();
  const auto start = Clock::now();
  const auto labels = labels_of(dataset);
  ModelConfig cfg = spec.model;
  cfg.input_dim = dataset.dim();
  cfg.max_nodes = max_nodes_of(dataset);
  cfg.validate();

  ExperimentReport report;
  report.kind = "single";
  report.config = spec_json(spec);
  report.config["model"] = to_json(cfg);
  report.config["dataset"] = dataset_name;
  report.config["feature_mode"] = std::string(to_string(dataset.mode));

  std::vector<ReportRow> rows(spec.repeats);
  std::optional<TrainedModel> first;
  parallel_for(spec.repeats, spec.jobs, [&](std::size_t i) {
    const std::uint64_t seed = repeat_seed(spec.seed, i);
    const Split split = stratified_split(labels, spec.train_frac, seed);
    auto [ds, norm] = prepared(dataset, split.train, spec.normalize);
    ModelConfig mc = cfg;
    mc.seed = mix_seed(seed, 11);
    DiffPoolModel model(mc);
    TrainConfig tc = spec.train;
    tc.seed = mix_seed(seed, 12);
    train_model(model, refs(ds, split.train), tc);
    rows[i] = ReportRow{spec.scenario, "test", dataset_name, i, evaluate(model, refs(ds, split.test))};
    if (i == 0) first = TrainedModel{mc, model.params().flatten(), norm, seed};
  });

  report.rows = std::move(rows);
  report.summary = summarize_rows(report.rows);
  report.model = std::move(first);
  report.wall_clock_s = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

ExperimentReport run_incremental(const ExperimentSpec& spec, const GraphDataset& d1,
                                 const std::string& name1, const GraphDataset& d2,
                                 const std::string& name2, std::span<const Variant> variants) {
  spec.validate();
  if (variants.empty()) throw Error(ErrorCode::InvalidConfig, "incremental run needs at least one method");
  if (d1.dim() != d2.dim()) {
    throw Error(ErrorCode::ArchitectureMismatch, "datasets have feature dimensions " +
                                                     std::to_string(d1.dim()) + " and " +
                                                     std::to_string(d2.dim()));
  }
  const auto start = Clock::now();
  const bool same = &d1 == &d2;
  const auto labels1 = labels_of(d1);
  const auto labels2 = labels_of(d2);
  ModelConfig cfg = spec.model;
  cfg.input_dim = d1.dim();
  cfg.max_nodes = std::max(max_nodes_of(d1), max_nodes_of(d2));
  cfg.validate();

  ExperimentReport report;
  report.kind = "incremental";
  report.config = spec_json(spec);
  report.config["model"] = to_json(cfg);
  report.config["datasets"] = {name1, name2};
  report.config["feature_mode"] = std::string(to_string(d1.mode));

  struct RepeatOut {
    std::vector<ReportRow> rows;
    std::vector<RunHistory> histories;
    std::vector<nlohmann::json> info;
    std::optional<TrainedModel> model;
  };
  std::vector<RepeatOut> outs(spec.repeats);

  parallel_for(spec.repeats, spec.jobs, [&](std::size_t i) {
    const std::uint64_t seed = repeat_seed(spec.seed, i);
    const Split s1 = stratified_split(labels1, spec.train_frac, seed);
    const Split s2 = same ? s1 : stratified_split(labels2, spec.train_frac, mix_seed(seed, 21));
    auto [ds1, norm1] = prepared(d1, s1.train, spec.normalize);
    auto [ds2, norm2] = prepared(d2, s2.train, spec.normalize);
    auto [val1_idx, train1_idx] = carve(s1.train, spec.val_frac, mix_seed(seed, 23));
    auto [val2_idx, train2_idx] = carve(s2.train, spec.val_frac, mix_seed(seed, 22));
    const GraphRefs train1 = refs(ds1, train1_idx);
    const GraphRefs test1 = refs(ds1, s1.test);
    const GraphRefs test2 = refs(ds2, s2.test);

    ModelConfig mc = cfg;
    mc.seed = mix_seed(seed, 11);
    DiffPoolModel model(mc);
    TrainConfig tc = spec.train;
    tc.seed = mix_seed(seed, 12);
    train_model(model, train1, tc);
    const std::vector<double> theta1 = model.params().flatten();

    RepeatOut& out = outs[i];
    const Metrics p1a = evaluate(model, test1);
    const Metrics p1b = same ? p1a : evaluate(model, test2);

    IncrementalData data;
    data.train2 = refs(ds2, train2_idx);
    data.pool1 = refs(ds1, s1.train);
    data.val1 = refs(ds1, val1_idx);
    data.val2 = refs(ds2, val2_idx);
    data.eval1 = test1;
    data.eval2 = test2;

    for (const auto& v : variants) {
      out.rows.push_back({v.name, "phase1", name1, i, p1a});
      out.rows.push_back({v.name, "phase1", name2, i, p1b});
      model.params().unflatten(theta1);
      IncrementalParams ip = v.params;
      ip.train.seed = mix_seed(seed, 13);
      const IncrementalResult res = train_incremental(model, data, ip);
      out.rows.push_back({v.name, "phase2", name1, i, evaluate(model, test1)});
      out.rows.push_back({v.name, "phase2", name2, i, evaluate(model, test2)});
      out.histories.push_back({v.name, i, res.history});

      const auto theta2 = model.params().flatten();
      double drift = 0.0;
      for (std::size_t k = 0; k < theta2.size(); ++k) drift += (theta2[k] - theta1[k]) * (theta2[k] - theta1[k]);
      nlohmann::json info{{"repeat", i},
                          {"drift", std::sqrt(drift)},
                          {"best_epoch", res.best_epoch},
                          {"epochs_run", res.history.size()}};
      if (res.ref_loss) {
        info["ref_loss"] = *res.ref_loss;
        info["max_memory_loss"] = res.max_memory_loss;
        info["accepted_steps"] = res.accepted_steps;
        info["rejected_steps"] = res.rejected_steps;
        info["violating_steps"] = res.violating_steps;
        info["projected_steps"] = res.projected_steps;
        info["epoch_audit_violations"] = res.epoch_audit_violations;
      }
      out.info.push_back(std::move(info));
      if (i == 0 && &v == &variants.back()) {
        out.model = TrainedModel{mc, theta2, norm2, seed};
      }
    }
  });

  for (const auto& v : variants) {
    nlohmann::json info{{"method", std::string(to_string(v.params.method))}, {"runs", nlohmann::json::array()}};
    if (v.params.method == ContinualMethod::Gem) info["mem_size"] = v.params.mem_size;
    if (v.params.method == ContinualMethod::Ewc) {
      info["lambda"] = v.params.lambda;
      info["fisher_samples"] = v.params.fisher_samples;
    }
    report.scenario_info[v.name] = std::move(info);
  }
  for (std::size_t i = 0; i < outs.size(); ++i) {
    auto& o = outs[i];
    report.rows.insert(report.rows.end(), o.rows.begin(), o.rows.end());
    report.histories.insert(report.histories.end(), o.histories.begin(), o.histories.end());
    for (std::size_t k = 0; k < variants.size(); ++k) {
      report.scenario_info[variants[k].name]["runs"].push_back(o.info[k]);
    }
  }
  report.model = std::move(outs[0].model);
  // group rows by scenario so summaries and CSV read naturally
  std::stable_sort(report.rows.begin(), report.rows.end(), [&](const ReportRow& a, const ReportRow& b) {
    auto pos = [&](const std::string& s) {
      return std::find_if(variants.begin(), variants.end(), [&](const Variant& v) { return v.name == s; }) -
             variants.begin();
    };
    return pos(a.scenario) < pos(b.scenario);
  });
  report.summary = summarize_rows(report.rows);
  report.wall_clock_s = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

std::string clip_label(const ClipSpec& clip) {
  if (clip.unbounded()) return "full";
  std::string out;
  if (clip.max_tweets) out += std::to_string(*clip.max_tweets) + "tw";
  if (clip.max_hours) {
    if (!out.empty()) out += "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%gh", *clip.max_hours);
    out += buf;
  }
  return out;
}

std::vector<ExperimentReport> clip_sweep(const ExperimentSpec& spec, const RawCorpus& corpus,
                                         const BuildOptions& base, std::span<const ClipSpec> clips,
                                         const std::string& dataset_name) {
  std::vector<ExperimentReport> out;
  for (const auto& clip : clips) {
    BuildOptions opts = base;
    opts.clip = clip;
    BuildResult built = build_dataset(corpus, opts);
    if (built.dataset.graphs.empty()) throw Error(ErrorCode::EmptyResult, "clip " + clip_label(clip) + " left no graphs");
    ExperimentSpec s = spec;
    s.scenario = "clip-" + clip_label(clip);
    ExperimentReport r = run_single(s, built.dataset, dataset_name);
    r.kind = "clip";
    r.config["clip"] = to_json(clip);
    const DatasetSummary sum = summarize(built.dataset);
    r.scenario_info[s.scenario] = {{"clip", to_json(clip)},
                                   {"mean_nodes", sum.mean_nodes},
                                   {"mean_edges", sum.mean_edges},
                                   {"graphs", built.dataset.graphs.size()}};
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"scenario", row.scenario},
                    {"phase", row.phase},
                    {"dataset", row.dataset},
                    {"repeat", row.repeat},
                    {"metrics", metrics_json(row.metrics)}});
  }
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& s : r.summary) {
    summary.push_back({{"scenario", s.scenario},
                       {"phase", s.phase},
                       {"dataset", s.dataset},
                       {"count", s.count},
                       {"mean", metrics_json(s.mean)},
                       {"std", metrics_json(s.stddev)}});
  }
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : r.histories) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : h.epochs) {
      epochs.push_back({{"epoch", e.epoch},
                        {"task1", metrics_json(e.task1)},
                        {"task2", metrics_json(e.task2)},
                        {"train_loss", e.train_loss},
                        {"memory_loss", e.memory_loss},
                        {"constraint_violations", e.constraint_violations}});
    }
    hist.push_back({{"scenario", h.scenario}, {"repeat", h.repeat}, {"epochs", std::move(epochs)}});
  }
  nlohmann::json info = nlohmann::json::object();
  for (const auto& [k, v] : r.scenario_info) info[k] = v;
  return {{"kind", r.kind},         {"config", r.config},   {"rows", std::move(rows)},
          {"summary", std::move(summary)}, {"histories", std::move(hist)}, {"scenarios", std::move(info)},
          {"wall_clock_s", r.wall_clock_s}};
}

ExperimentReport report_from_json(const nlohmann::json& j) {
  try {
    ExperimentReport r;
    r.kind = j.at("kind").get<std::string>();
    r.config = j.value("config", nlohmann::json::object());
    for (const auto& row : j.at("rows")) {
      r.rows.push_back({row.at("scenario").get<std::string>(), row.at("phase").get<std::string>(),
                        row.at("dataset").get<std::string>(), row.at("repeat").get<std::size_t>(),
                        metrics_from(row.at("metrics"))});
    }
    const nlohmann::json histories = j.value("histories", nlohmann::json::array());
    for (const auto& h : histories) {
      RunHistory rh{h.at("scenario").get<std::string>(), h.at("repeat").get<std::size_t>(), {}};
      for (const auto& e : h.at("epochs")) {
        EpochRecord rec;
        rec.epoch = e.at("epoch").get<std::size_t>();
        rec.task1 = metrics_from(e.at("task1"));
        rec.task2 = metrics_from(e.at("task2"));
        rec.train_loss = e.at("train_loss").get<double>();
        rec.memory_loss = e.at("memory_loss").get<double>();
        rec.constraint_violations = e.at("constraint_violations").get<std::size_t>();
        rh.epochs.push_back(rec);
      }
      r.histories.push_back(std::move(rh));
    }
    const nlohmann::json scenarios = j.value("scenarios", nlohmann::json::object());
    for (const auto& [k, v] : scenarios.items()) r.scenario_info[k] = v;
    r.wall_clock_s = j.value("wall_clock_s", 0.0);
    r.summary = summarize_rows(r.rows);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed report: ") + e.what());
  }
}

std::string report_csv(std::span<const ExperimentReport> reports) {
  std::ostringstream os;
  os << "scenario,phase,dataset,repeat,acc,pre,rec,f1\n";
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      os << row.scenario << ',' << row.phase << ',' << row.dataset << ',' << row.repeat << ','
         << metric_cells(row.metrics) << '\n';
    }
    for (const auto& s : r.summary) {
      os << s.scenario << ',' << s.phase << ',' << s.dataset << ",mean," << metric_cells(s.mean) << '\n';
      os << s.scenario << ',' << s.phase << ',' << s.dataset << ",std," << metric_cells(s.stddev) << '\n';
    }
  }
  return os.str();
}

std::string plot_csv(std::span<const ExperimentReport> reports) {
  std::ostringstream os;
  os << "scenario,phase,dataset,metric,mean,std\n";
  for (const auto& r : reports) {
    for (const auto& s : r.summary) {
      const std::pair<const char*, double> cells[] = {{"accuracy", s.mean.accuracy},
                                                      {"precision", s.mean.precision},
                                                      {"recall", s.mean.recall},
                                                      {"f1", s.mean.f1}};
      const double sds[] = {s.stddev.accuracy, s.stddev.precision, s.stddev.recall, s.stddev.f1};
      for (int k = 0; k < 4; ++k) {
        os << s.scenario << ',' << s.phase << ',' << s.dataset << ',' << cells[k].first << ','
           << fmt(cells[k].second) << ',' << fmt(sds[k]) << '\n';
      }
    }
  }
  return os.str();
}

std::string history_csv(std::span<const ExperimentReport> reports) {
  std::ostringstream os;
  os << "scenario,repeat,epoch,task1_acc,task1_pre,task1_rec,task1_f1,task2_acc,task2_pre,task2_rec,task2_f1,"
        "train_loss,memory_loss,constraint_violations\n";
  for (const auto& r : reports) {
    for (const auto& h : r.histories) {
      for (const auto& e : h.epochs) {
        os << h.scenario << ',' << h.repeat << ',' << e.epoch << ',' << metric_cells(e.task1) << ','
           << metric_cells(e.task2) << ',' << fmt(e.train_loss) << ',' << fmt(e.memory_loss) << ','
           << e.constraint_violations << '\n';
      }
    }
  }
  return os.str();
}

std::string metrics_table_csv(std::span<const ExperimentReport> reports) {
  std::ostringstream os;
  os << "dataset,scenario,features,accuracy,precision,recall,f1\n";
  for (const auto& r : reports) {
    const std::string features = r.config.value("feature_mode", "");
    for (const auto& s : r.summary) {
      if (s.phase == "phase1") continue;
      os << s.dataset << ',' << s.scenario << ',' << features << ',' << metric_cells(s.mean) << '\n';
    }
  }
  return os.str();
}

std::string lambda_table_csv(std::span<const ExperimentReport> reports) {
  std::ostringstream os;
  os << "lambda,task1_acc,task1_f1,task2_acc,task2_f1\n";
  for (const auto& r : reports) {
    if (r.kind != "incremental") continue;
    const auto names = r.config.value("datasets", nlohmann::json::array());
    if (names.size() != 2) continue;
    std::vector<std::pair<double, std::string>> lines;
    for (const auto& [scenario, info] : r.scenario_info) {
      if (!info.contains("lambda")) continue;
      const SummaryRow* t1 = nullptr;
      const SummaryRow* t2 = nullptr;
      for (const auto& s : r.summary) {
        if (s.scenario != scenario || s.phase != "phase2") continue;
        if (s.dataset == names[0].get<std::string>()) t1 = &s;
        if (s.dataset == names[1].get<std::string>()) t2 = &s;
      }
      if (!t1 || !t2) continue;
      char lam[32];
      std::snprintf(lam, sizeof(lam), "%g", info.at("lambda").get<double>());
      lines.emplace_back(info.at("lambda").get<double>(),
                         std::string(lam) + ',' + fmt(t1->mean.accuracy) + ',' + fmt(t1->mean.f1) + ',' +
                             fmt(t2->mean.accuracy) + ',' + fmt(t2->mean.f1) + '\n');
    }
    std::stable_sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& l : lines) os << l.second;
  }
  return os.str();
}

}  // namespace cascadecl
