#pragma once

// Experiment protocol: seeded stratified splits, repeated train/evaluate
// cycles, two-phase incremental scenarios and clipping sweeps.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cascadecl/continual.hpp"
#include "cascadecl/dataset.hpp"
#include "cascadecl/gnn.hpp"
#include "cascadecl/metrics.hpp"
#include "cascadecl/training.hpp"

#include <json.hpp>

namespace cascadecl {

struct ExperimentSpec {
  std::string scenario = "single";
  /// input_dim and max_nodes are taken from the data.
  ModelConfig model;
  TrainConfig train;
  std::size_t repeats = 5;
  double train_frac = 0.75;
  /// Share of each training split held out for early stopping in incremental runs.
  double val_frac = 0.1;
  bool normalize = true;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  /// Throws InvalidConfig.
  void validate() const;
};

/// One phase-2 configuration of an incremental scenario.
struct Variant {
  std::string name;
  IncrementalParams params;
};

struct ReportRow {
  std::string scenario;
  std::string phase;
  std::string dataset;
  std::size_t repeat = 0;
  Metrics metrics;
};

struct SummaryRow {
  std::string scenario;
  std::string phase;
  std::string dataset;
  std::size_t count = 0;
  Metrics mean;
  Metrics stddev;  // sample standard deviation; 0 for a single repeat
};

struct RunHistory {
  std::string scenario;
  std::size_t repeat = 0;
  std::vector<EpochRecord> epochs;
};

/// Parameters of the repeat-0 model, enough to rebuild a checkpoint.
struct TrainedModel {
  ModelConfig config;
  std::vector<double> params;
  std::optional<NormStats> norm;
  std::uint64_t split_seed = 0;
};

struct ExperimentReport {
  std::string kind;  // "single", "incremental" or "clip"
  nlohmann::json config = nlohmann::json::object();
  std::vector<ReportRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<RunHistory> histories;
  /// Per-scenario extras (method, lambda, drift, GEM audit, ...).
  std::map<std::string, nlohmann::json> scenario_info;
  double wall_clock_s = 0.0;
  std::optional<TrainedModel> model;
};

/// Groups rows by (scenario, phase, dataset) in first-appearance order.
std::vector<SummaryRow> summarize_rows(std::span<const ReportRow> rows);

/// Split seed of repeat `i`.
std::uint64_t repeat_seed(std::uint64_t seed, std::size_t repeat);

/// `repeats` independent split/initialize/train/evaluate cycles on one dataset.
ExperimentReport run_single(const ExperimentSpec& spec, const GraphDataset& dataset,
                            const std::string& dataset_name);

/// Phase 1 trains on d1; every variant then continues from the same phase-1
/// model on d2. Rows carry test metrics on both datasets after each phase.
ExperimentReport run_incremental(const ExperimentSpec& spec, const GraphDataset& d1,
                                 const std::string& name1, const GraphDataset& d2,
                                 const std::string& name2, std::span<const Variant> variants);

/// One run_single per clip spec, built from the same corpus with shared seeds.
std::vector<ExperimentReport> clip_sweep(const ExperimentSpec& spec, const RawCorpus& corpus,
                                         const BuildOptions& base, std::span<const ClipSpec> clips,
                                         const std::string& dataset_name);

std::string clip_label(const ClipSpec& clip);

nlohmann::json to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);

/// scenario,phase,dataset,repeat,acc,pre,rec,f1 with per-repeat rows then mean/std rows.
std::string report_csv(std::span<const ExperimentReport> reports);
/// Long format for bar charts: scenario,phase,dataset,metric,mean,std.
std::string plot_csv(std::span<const ExperimentReport> reports);
/// Per-epoch task metrics of every incremental run.
std::string history_csv(std::span<const ExperimentReport> reports);
/// One row per (scenario, dataset) of final test metrics: dataset,scenario,accuracy,precision,recall,f1.
std::string metrics_table_csv(std::span<const ExperimentReport> reports);
/// EWC regularization sweep: lambda,task1_acc,task1_f1,task2_acc,task2_f1.
std::string lambda_table_csv(std::span<const ExperimentReport> reports);

}  // namespace cascadecl
