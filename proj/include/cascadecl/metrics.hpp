#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cascadecl {

/// Binary confusion counts with class 1 (Fake) as "positive".
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

/// Accuracy plus macro-averaged precision, recall and F1 over both classes.
struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Confusion confusion(std::span<const std::size_t> predictions, std::span<const std::size_t> labels);

/// Macro metrics; a class with no predicted (or no actual) members contributes 0 precision (recall).
Metrics metrics_from_confusion(const Confusion& c);

/// Throws EmptyInput on empty or unequal-length inputs.
Metrics compute_metrics(std::span<const std::size_t> predictions, std::span<const std::size_t> labels);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded label-stratified split: |train| = ceil(frac * n), per-class shares
/// proportional (largest remainder). Both index lists come back shuffled.
Split stratified_split(std::span<const std::size_t> labels, double frac, std::uint64_t seed);

}  // namespace cascadecl
