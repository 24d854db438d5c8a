#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cascadecl/gnn.hpp"
#include "cascadecl/metrics.hpp"

namespace cascadecl {

using GraphRefs = std::vector<const PropagationGraph*>;

struct TrainConfig {
  std::size_t epochs = 60;
  /// Stop after this many epochs without a lower mean training loss; 0 disables.
  std::size_t patience = 10;
  std::size_t batch_size = 16;
  AdamConfig adam;
  std::uint64_t seed = 0;
};

struct TrainHistory {
  std::vector<double> epoch_loss;
  std::size_t best_epoch = 0;  // 1-based; 0 when no epoch ran
};

/// Mini-batch Adam; restores the parameters of the lowest-training-loss epoch.
TrainHistory train_model(DiffPoolModel& model, std::span<const PropagationGraph* const> train,
                         const TrainConfig& cfg);

std::vector<std::size_t> predict_all(const DiffPoolModel& model,
                                     std::span<const PropagationGraph* const> graphs);
Metrics evaluate(const DiffPoolModel& model, std::span<const PropagationGraph* const> graphs);

/// Consecutive batches of `order` of at most `batch_size`.
std::vector<GraphRefs> make_batches(const GraphRefs& order, std::size_t batch_size);

/// splitmix64-style mixing for deriving independent seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace cascadecl
