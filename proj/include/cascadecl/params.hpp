#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cascadecl/tensor.hpp"

namespace cascadecl {

/// Ordered flat storage for every trainable tensor of a model.
class ParamVector {
 public:
  struct Slot {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;
  };

  std::size_t add(std::string name, const Tensor2& init);

  std::size_t size() const { return values_.size(); }
  std::size_t tensor_count() const { return slots_.size(); }
  const std::vector<Slot>& slots() const { return slots_; }

  Tensor2 tensor(std::size_t index) const;

  std::vector<double> flatten() const { return values_; }
  /// Throws LengthMismatch unless `flat.size() == size()`.
  void unflatten(std::span<const double> flat);
  /// Concatenates per-tensor gradients into one vector aligned with this layout.
  std::vector<double> flatten_like(std::span<const Tensor2> per_tensor) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<Slot> slots_;
  std::vector<double> values_;
};

void sgd_step(std::span<double> params, std::span<const double> grads, double lr);

struct AdamState {
  std::size_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam; `state` is sized on first use.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

}  // namespace cascadecl
