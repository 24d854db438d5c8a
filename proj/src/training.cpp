#include "cascadecl/training.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace cascadecl {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed;
  for (std::uint64_t v : {a, b}) {
    z += 0x9E3779B97F4A7C15ULL + v;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
  }
  return z;
}

std::vector<GraphRefs> make_batches(const GraphRefs& order, std::size_t batch_size) {
  std::vector<GraphRefs> batches;
  const std::size_t bs = std::max<std::size_t>(1, batch_size);
  for (std::size_t i = 0; i < order.size(); i += bs) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + bs)));
  }
  return batches;
}

TrainHistory train_model(DiffPoolModel& model, std::span<const PropagationGraph* const> train,
                         const TrainConfig& cfg) {
  TrainHistory hist;
  if (train.empty() || cfg.epochs == 0) return hist;

  std::mt19937_64 rng(cfg.seed);
  AdamState adam;
  GraphRefs order(train.begin(), train.end());
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = model.params().flatten();
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (const auto& batch : make_batches(order, cfg.batch_size)) {
      const LossGrad lg = batch_loss_grad(model, batch);
      total += lg.loss * static_cast<double>(batch.size());
      adam_step(model.params().values(), lg.grad, adam, cfg.adam);
    }
    const double epoch_loss = total / static_cast<double>(order.size());
    hist.epoch_loss.push_back(epoch_loss);
    if (epoch_loss < best) {
      best = epoch_loss;
      best_params = model.params().flatten();
      hist.best_epoch = epoch;
      stale = 0;
    } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
      break;
    }
  }
  model.params().unflatten(best_params);
  return hist;
}

std::vector<std::size_t> predict_all(const DiffPoolModel& model,
                                     std::span<const PropagationGraph* const> graphs) {
  std::vector<std::size_t> out;
  out.reserve(graphs.size());
  for (const auto* g : graphs) out.push_back(model.predict(*g));
  return out;
}

Metrics evaluate(const DiffPoolModel& model, std::span<const PropagationGraph* const> graphs) {
  std::vector<std::size_t> labels;
  labels.reserve(graphs.size());
  for (const auto* g : graphs) labels.push_back(static_cast<std::size_t>(g->label));
  return compute_metrics(predict_all(model, graphs), labels);
}

}  // namespace cascadecl
