#pragma once

// Hierarchical-pooling graph classifier (DiffPool over normalized propagation).

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cascadecl/autodiff.hpp"
#include "cascadecl/cascade.hpp"
#include "cascadecl/params.hpp"

namespace cascadecl {

struct ModelConfig {
  std::size_t pool_layers = 3;
  std::size_t hidden_dim = 64;
  std::size_t embed_dim = 64;
  double pool_ratio = 0.25;
  std::size_t input_dim = 8;
  /// Node count the cluster widths are sized for; larger graphs are clamped to those widths.
  std::size_t max_nodes = 128;
  double aux_link_weight = 0.1;
  double aux_entropy_weight = 0.1;
  bool directed = false;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig when a field is outside its supported range.
  void validate() const;
  /// Fixed cluster widths of each pooling level.
  std::vector<std::size_t> cluster_widths() const;
  bool same_architecture(const ModelConfig& other) const;
};

/// Clusters used for a level of `n` nodes with a width cap of `width`.
std::size_t pooled_size(std::size_t n, double ratio, std::size_t width);

/// Dense 0/1 adjacency of the propagation graph; symmetrized unless `directed`.
Tensor2 dense_adjacency(const PropagationGraph& g, bool directed);

/// D^-1/2 (A + I) D^-1/2.
Tensor2 normalize_adjacency(const Tensor2& adjacency);

/// ReLU(A_norm H W).
Var propagate(const Var& a_norm, const Var& h, const Var& w);

struct PoolLevel {
  Var adjacency;   // S^T A S
  Var embeddings;  // S^T Z
  Var assignment;  // S
  Var link_loss;   // ||A - S S^T||_F^2 / n^2
  Var entropy_loss;
};

PoolLevel diffpool_level(const Var& adjacency, const Var& z, const Var& s_logits);

struct Forward {
  Var logits;  // 1 x 2
  Var aux;     // 1 x 1 weighted auxiliary pooling losses
};

struct LossGrad {
  double loss = 0.0;
  double cross_entropy = 0.0;
  double aux = 0.0;
  std::vector<double> grad;  // aligned with DiffPoolModel::params()
};

class DiffPoolModel {
 public:
  explicit DiffPoolModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }

  /// Records the forward pass on `tape`; `param_vars` receives the watched parameters.
  Forward forward(Tape& tape, const PropagationGraph& g, std::vector<Var>& param_vars) const;

  std::array<double, 2> logits(const PropagationGraph& g) const;
  std::size_t predict(const PropagationGraph& g) const;
  /// Cross-entropy plus weighted auxiliary losses.
  double loss(const PropagationGraph& g) const;
  LossGrad loss_grad(const PropagationGraph& g) const;
  /// Gradient of cross_entropy(logits, label) alone, i.e. minus the log-likelihood score.
  std::vector<double> nll_grad(const PropagationGraph& g, std::size_t label) const;

 private:
  void check_input(const PropagationGraph& g) const;

  ModelConfig config_;
  ParamVector params_;
};

/// Mean loss and mean gradient over a set of graphs.
LossGrad batch_loss_grad(const DiffPoolModel& model, std::span<const PropagationGraph* const> graphs);
double mean_loss(const DiffPoolModel& model, std::span<const PropagationGraph* const> graphs);

}  // namespace cascadecl
