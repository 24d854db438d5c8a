#pragma once

// Two-task incremental training: plain fine-tuning, gradient episodic memory
// (GEM) and elastic weight consolidation (EWC).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cascadecl/gnn.hpp"
#include "cascadecl/metrics.hpp"
#include "cascadecl/training.hpp"

namespace cascadecl {

enum class ContinualMethod { Naive, Gem, Ewc };

std::string_view to_string(ContinualMethod m);
ContinualMethod parse_continual_method(std::string_view text);

/// Indices of a seeded uniform sample without replacement; throws SizeExceedsDataset.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t size, std::uint64_t seed);

struct EpisodicMemory {
  GraphRefs samples;
  std::vector<std::size_t> ids;  // positions in the pool the samples were drawn from
  double ref_loss = 0.0;         // mean loss over samples at the end of task 1; never recomputed
};

/// Call once task-1 training has finished: ref_loss is taken at the model's current parameters.
EpisodicMemory sample_memory(std::span<const PropagationGraph* const> pool, std::size_t size,
                             std::uint64_t seed, const DiffPoolModel& model);

struct GemProjection {
  std::vector<double> grad;
  bool projected = false;
  bool degenerate = false;  // memory gradient norm below 1e-12, left unprojected
  double dot = 0.0;         // <g, g_mem> before projection
};

/// Closest vector to `g` (Euclidean) with <result, g_mem> >= 0.
GemProjection gem_project(std::span<const double> g, std::span<const double> g_mem);

struct GemStepResult {
  bool accepted = false;   // update kept
  bool violation = false;  // post-update memory loss above ref_loss + tolerance
  bool projected = false;
  bool degenerate = false;
  double batch_loss = 0.0;
  double memory_loss = 0.0;  // after the step if accepted, else unchanged
};

/// GEM optimizer over one memory. Every step is audited against
/// ref_loss + tolerance; with `rollback` a violating step is undone
/// (parameters and Adam moments), otherwise it is kept and counted.
class GemLearner {
 public:
  GemLearner(const EpisodicMemory& memory, AdamConfig adam, double tolerance = 1e-6, bool rollback = false);

  GemStepResult step(DiffPoolModel& model, std::span<const PropagationGraph* const> batch);

  double memory_loss() const { return cached_.loss; }
  std::size_t rejected() const { return rejected_; }
  std::size_t violations() const { return violations_; }
  std::size_t projected() const { return projected_; }
  std::size_t degenerate() const { return degenerate_; }
  /// Largest memory loss observed after a kept step.
  double max_accepted_memory_loss() const { return max_accepted_; }

 private:
  void refresh(const DiffPoolModel& model);

  const EpisodicMemory* memory_;
  AdamConfig adam_cfg_;
  AdamState adam_;
  double tolerance_;
  bool rollback_;
  LossGrad cached_;
  bool have_cache_ = false;
  std::size_t rejected_ = 0;
  std::size_t violations_ = 0;
  std::size_t projected_ = 0;
  std::size_t degenerate_ = 0;
  double max_accepted_;
};

/// One GEM update on `batch` with a fresh optimizer state.
GemStepResult gem_step(DiffPoolModel& model, std::span<const PropagationGraph* const> batch,
                       const EpisodicMemory& memory, const AdamConfig& adam);

enum class FisherLabels {
  Sampled,   // label drawn from the model's predictive distribution
  Empirical  // dataset label
};

/// Diagonal Fisher: mean over samples of the squared log-likelihood gradient.
std::vector<double> estimate_fisher(const DiffPoolModel& model,
                                    std::span<const PropagationGraph* const> samples,
                                    FisherLabels labels, std::uint64_t seed);

struct FisherState {
  std::vector<double> theta_star;
  std::vector<double> fisher_diag;
  double lambda = 1.0;
};

/// (lambda/2) * sum_i F_i (theta_i - theta*_i)^2
double ewc_penalty(std::span<const double> theta, const FisherState& fs);
/// lambda * F ⊙ (theta - theta*)
std::vector<double> ewc_penalty_grad(std::span<const double> theta, const FisherState& fs);

/// Mean batch loss plus the EWC penalty, with its gradient.
LossGrad ewc_loss(const DiffPoolModel& model, std::span<const PropagationGraph* const> batch,
                  const FisherState& fs);

struct IncrementalParams {
  ContinualMethod method = ContinualMethod::Naive;
  std::size_t mem_size = 100;
  double lambda = 1e3;
  std::size_t fisher_samples = 100;
  FisherLabels fisher_labels = FisherLabels::Sampled;
  std::size_t ewc_patience = 5;
  double gem_tolerance = 1e-6;
  bool gem_rollback = false;
  TrainConfig train;
};

struct IncrementalData {
  GraphRefs train2;      // task-2 training graphs
  GraphRefs pool1;       // task-1 training graphs (memory / Fisher source)
  GraphRefs val1, val2;  // early-stopping sets (EWC)
  GraphRefs eval1, eval2;
};

struct EpochRecord {
  std::size_t epoch = 0;
  Metrics task1;
  Metrics task2;
  double train_loss = 0.0;
  double memory_loss = 0.0;  // GEM only
  std::size_t constraint_violations = 0;
};

struct IncrementalResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::optional<double> ref_loss;
  double max_memory_loss = 0.0;  // over kept GEM steps
  std::size_t violating_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t projected_steps = 0;
  std::size_t accepted_steps = 0;
  std::size_t epoch_audit_violations = 0;
  std::vector<double> theta_start;
};

/// Continues training `model` (task-1 parameters) on task 2 with the chosen method.
IncrementalResult train_incremental(DiffPoolModel& model, const IncrementalData& data,
                                    const IncrementalParams& params);

}  // namespace cascadecl
