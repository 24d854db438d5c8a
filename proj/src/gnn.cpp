#include "cascadecl/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "cascadecl/error.hpp"

namespace cascadecl {

namespace {

void require_range(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, what);
}

Tensor2 glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor2 t(fan_in, fan_out);
  for (auto& v : t.storage()) v = dist(rng);
  return t;
}

Tensor2 feature_tensor(const PropagationGraph& g) {
  return Tensor2(g.features.rows, g.features.cols, g.features.data);
}

}  // namespace

void ModelConfig::validate() const {
  require_range(pool_layers >= 2 && pool_layers <= 4, "pool_layers must be in [2,4]");
  require_range(hidden_dim >= 16 && hidden_dim <= 128, "hidden_dim must be in [16,128]");
  require_range(embed_dim >= 16 && embed_dim <= 128, "embed_dim must be in [16,128]");
  require_range(pool_ratio > 0.0 && pool_ratio < 1.0, "pool_ratio must be in (0,1)");
  require_range(input_dim >= 1, "input_dim must be positive");
  require_range(max_nodes >= 2, "max_nodes must be at least 2");
  require_range(aux_link_weight >= 0.0 && aux_entropy_weight >= 0.0,
                "auxiliary loss weights must be non-negative");
}

std::vector<std::size_t> ModelConfig::cluster_widths() const {
  std::vector<std::size_t> widths;
  std::size_t n = max_nodes;
  for (std::size_t k = 0; k < pool_layers; ++k) {
    n = pooled_size(n, pool_ratio, n);
    widths.push_back(n);
  }
  return widths;
}

bool ModelConfig::same_architecture(const ModelConfig& o) const {
  return pool_layers == o.pool_layers && hidden_dim == o.hidden_dim && embed_dim == o.embed_dim &&
         pool_ratio == o.pool_ratio && input_dim == o.input_dim && max_nodes == o.max_nodes &&
         directed == o.directed;
}

std::size_t pooled_size(std::size_t n, double ratio, std::size_t width) {
  const auto target = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n)));
  return std::max<std::size_t>(1, std::min(target, width));
}

Tensor2 dense_adjacency(const PropagationGraph& g, bool directed) {
  Tensor2 a(g.n, g.n);
  for (const auto& [src, dst] : g.edges) {
    if (src == dst) continue;
    a(src, dst) = 1.0;
    if (!directed) a(dst, src) = 1.0;
  }
  return a;
}

Tensor2 normalize_adjacency(const Tensor2& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "adjacency must be square");
  }
  const std::size_t n = adjacency.rows();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 1.0;
    for (std::size_t j = 0; j < n; ++j) d += adjacency(i, j);
    s[i] = 1.0 / std::sqrt(d);
  }
  Tensor2 out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out(i, j) = s[i] * (adjacency(i, j) + (i == j ? 1.0 : 0.0)) * s[j];
    }
  }
  return out;
}

Var propagate(const Var& a_norm, const Var& h, const Var& w) {
  if (a_norm.cols() != h.rows() || h.cols() != w.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "propagate: incompatible A, H, W shapes");
  }
  // contract the narrower side first
  if (w.cols() <= h.cols()) return relu(matmul(a_norm, matmul(h, w)));
  return relu(matmul(matmul(a_norm, h), w));
}

PoolLevel diffpool_level(const Var& adjacency, const Var& z, const Var& s_logits) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n || z.rows() != n || s_logits.rows() != n) {
    throw Error(ErrorCode::ShapeMismatch, "diffpool_level: A, Z and S must share the node count");
  }
  PoolLevel out;
  out.assignment = row_softmax(s_logits);
  const Var st = transpose(out.assignment);
  out.adjacency = matmul(matmul(st, adjacency), out.assignment);
  out.embeddings = matmul(st, z);
  const Var recon = matmul(out.assignment, st);
  out.link_loss = scale(frobenius_sq(sub(adjacency, recon)), 1.0 / static_cast<double>(n * n));
  out.entropy_loss = row_entropy_mean(out.assignment);
  return out;
}

DiffPoolModel::DiffPoolModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  const auto widths = config_.cluster_widths();
  for (std::size_t k = 0; k < config_.pool_layers; ++k) {
    const std::size_t in = k == 0 ? config_.input_dim : config_.embed_dim;
    const std::string prefix = "level" + std::to_string(k);
    params_.add(prefix + ".embed1", glorot(in, config_.hidden_dim, rng));
    params_.add(prefix + ".embed2", glorot(config_.hidden_dim, config_.embed_dim, rng));
    params_.add(prefix + ".pool", glorot(in, widths[k], rng));
  }
  params_.add("head.weight", glorot(config_.embed_dim, 2, rng));
  params_.add("head.bias", Tensor2(1, 2));
}

void DiffPoolModel::check_input(const PropagationGraph& g) const {
  if (g.n == 0) throw Error(ErrorCode::EmptyGraph, "graph '" + g.news_id + "' has no nodes");
  if (g.features.cols != config_.input_dim || g.features.rows != g.n) {
    throw Error(ErrorCode::DimensionMismatch,
                "graph '" + g.news_id + "' has feature dimension " + std::to_string(g.features.cols) +
                    ", model expects " + std::to_string(config_.input_dim));
  }
}

Forward DiffPoolModel::forward(Tape& tape, const PropagationGraph& g,
                               std::vector<Var>& param_vars) const {
  check_input(g);
  param_vars.clear();
  for (std::size_t i = 0; i < params_.tensor_count(); ++i) {
    param_vars.push_back(tape.parameter(params_.tensor(i)));
  }
  const auto widths = config_.cluster_widths();

  const Tensor2 raw = dense_adjacency(g, config_.directed);
  Var a_norm = tape.constant(normalize_adjacency(raw));
  Var a = tape.constant(raw);
  Var h = tape.constant(feature_tensor(g));
  Var aux = tape.constant(Tensor2(1, 1));
  std::size_t n = g.n;

  for (std::size_t k = 0; k < config_.pool_layers; ++k) {
    const Var& w1 = param_vars[3 * k];
    const Var& w2 = param_vars[3 * k + 1];
    const Var& wp = param_vars[3 * k + 2];
    if (k > 0) a_norm = sym_normalize(a);
    const Var hidden = propagate(a_norm, h, w1);
    const Var z = propagate(a_norm, hidden, w2);
    const std::size_t clusters = pooled_size(n, config_.pool_ratio, widths[k]);
    const Var s_logits = matmul(matmul(a_norm, h), col_slice(wp, clusters));
    PoolLevel level = diffpool_level(a, z, s_logits);
    aux = add(aux, add(scale(level.link_loss, config_.aux_link_weight),
                       scale(level.entropy_loss, config_.aux_entropy_weight)));
    a = level.adjacency;
    h = level.embeddings;
    n = clusters;
  }

  const Var readout = mean_rows(h);
  const Var logits = add(matmul(readout, param_vars[3 * config_.pool_layers]),
                         param_vars[3 * config_.pool_layers + 1]);
  return Forward{logits, aux};
}

std::array<double, 2> DiffPoolModel::logits(const PropagationGraph& g) const {
  Tape tape;
  std::vector<Var> vars;
  const Forward f = forward(tape, g, vars);
  return {f.logits.value()(0, 0), f.logits.value()(0, 1)};
}

std::size_t DiffPoolModel::predict(const PropagationGraph& g) const {
  const auto l = logits(g);
  return l[1] > l[0] ? 1 : 0;
}

double DiffPoolModel::loss(const PropagationGraph& g) const {
  Tape tape;
  std::vector<Var> vars;
  const Forward f = forward(tape, g, vars);
  const Var ce = cross_entropy(f.logits, static_cast<std::size_t>(g.label));
  return ce.value()(0, 0) + f.aux.value()(0, 0);
}

LossGrad DiffPoolModel::loss_grad(const PropagationGraph& g) const {
  Tape tape;
  std::vector<Var> vars;
  const Forward f = forward(tape, g, vars);
  const Var ce = cross_entropy(f.logits, static_cast<std::size_t>(g.label));
  const Var total = add(ce, f.aux);
  LossGrad out;
  out.cross_entropy = ce.value()(0, 0);
  out.aux = f.aux.value()(0, 0);
  out.loss = total.value()(0, 0);
  out.grad = params_.flatten_like(tape.backward(total, vars));
  return out;
}

std::vector<double> DiffPoolModel::nll_grad(const PropagationGraph& g, std::size_t label) const {
  Tape tape;
  std::vector<Var> vars;
  const Forward f = forward(tape, g, vars);
  const Var ce = cross_entropy(f.logits, label);
  return params_.flatten_like(tape.backward(ce, vars));
}

LossGrad batch_loss_grad(const DiffPoolModel& model, std::span<const PropagationGraph* const> graphs) {
  LossGrad out;
  out.grad.assign(model.params().size(), 0.0);
  if (graphs.empty()) return out;
  for (const auto* g : graphs) {
    const LossGrad one = model.loss_grad(*g);
    out.loss += one.loss;
    out.cross_entropy += one.cross_entropy;
    out.aux += one.aux;
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += one.grad[i];
  }
  const double inv = 1.0 / static_cast<double>(graphs.size());
  out.loss *= inv;
  out.cross_entropy *= inv;
  out.aux *= inv;
  for (auto& v : out.grad) v *= inv;
  return out;
}

double mean_loss(const DiffPoolModel& model, std::span<const PropagationGraph* const> graphs) {
  if (graphs.empty()) return 0.0;
  double s = 0.0;
  for (const auto* g : graphs) s += model.loss(*g);
  return s / static_cast<double>(graphs.size());
}

}  // namespace cascadecl
