#include "cascadecl/continual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "cascadecl/error.hpp"

namespace cascadecl {

std::string_view to_string(ContinualMethod m) {
  switch (m) {
    case ContinualMethod::Naive: return "naive";
    case ContinualMethod::Gem: return "gem";
    case ContinualMethod::Ewc: return "ewc";
  }
  return "?";
}

ContinualMethod parse_continual_method(std::string_view text) {
  if (text == "naive") return ContinualMethod::Naive;
  if (text == "gem") return ContinualMethod::Gem;
  if (text == "ewc") return ContinualMethod::Ewc;
  throw Error(ErrorCode::InvalidConfig, "unknown continual method '" + std::string(text) + "'");
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t size, std::uint64_t seed) {
  if (size > population) {
    throw Error(ErrorCode::SizeExceedsDataset, "cannot sample " + std::to_string(size) + " of " +
                                                   std::to_string(population) + " items");
  }
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(size);
  return idx;
}

EpisodicMemory sample_memory(std::span<const PropagationGraph* const> pool, std::size_t size,
                             std::uint64_t seed, const DiffPoolModel& model) {
  EpisodicMemory mem;
  mem.ids = sample_indices(pool.size(), size, seed);
  for (auto i : mem.ids) mem.samples.push_back(pool[i]);
  mem.ref_loss = mean_loss(model, mem.samples);
  return mem;
}

GemProjection gem_project(std::span<const double> g, std::span<const double> g_mem) {
  GemProjection out;
  out.grad.assign(g.begin(), g.end());
  out.dot = dot(g, g_mem);
  if (out.dot >= 0.0) return out;
  const double mm = dot(g_mem, g_mem);
  if (std::sqrt(mm) < 1e-12) {
    out.degenerate = true;
    return out;
  }
  const double coef = out.dot / mm;
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] -= coef * g_mem[i];
  out.projected = true;
  return out;
}

GemLearner::GemLearner(const EpisodicMemory& memory, AdamConfig adam, double tolerance, bool rollback)
    : memory_(&memory),
      adam_cfg_(adam),
      tolerance_(tolerance),
      rollback_(rollback),
      max_accepted_(-std::numeric_limits<double>::infinity()) {
  if (memory.samples.empty()) throw Error(ErrorCode::EmptySamples, "GEM needs a non-empty memory");
}

void GemLearner::refresh(const DiffPoolModel& model) {
  cached_ = batch_loss_grad(model, memory_->samples);
  have_cache_ = true;
}

GemStepResult GemLearner::step(DiffPoolModel& model, std::span<const PropagationGraph* const> batch) {
  if (!have_cache_) refresh(model);
  GemStepResult r;
  const LossGrad lg = batch_loss_grad(model, batch);
  r.batch_loss = lg.loss;
  GemProjection proj = gem_project(lg.grad, cached_.grad);
  r.projected = proj.projected;
  r.degenerate = proj.degenerate;
  if (proj.projected) ++projected_;
  if (proj.degenerate) ++degenerate_;

  const std::vector<double> before = model.params().flatten();
  const AdamState adam_before = adam_;
  const LossGrad cache_before = cached_;
  adam_step(model.params().values(), proj.grad, adam_, adam_cfg_);
  refresh(model);
  r.violation = cached_.loss > memory_->ref_loss + tolerance_;
  if (r.violation) ++violations_;
  if (r.violation && rollback_) {
    model.params().unflatten(before);
    adam_ = adam_before;
    cached_ = cache_before;
    ++rejected_;
  } else {
    r.accepted = true;
    max_accepted_ = std::max(max_accepted_, cached_.loss);
  }
  r.memory_loss = cached_.loss;
  return r;
}

GemStepResult gem_step(DiffPoolModel& model, std::span<const PropagationGraph* const> batch,
                       const EpisodicMemory& memory, const AdamConfig& adam) {
  GemLearner learner(memory, adam);
  return learner.step(model, batch);
}

std::vector<double> estimate_fisher(const DiffPoolModel& model,
                                    std::span<const PropagationGraph* const> samples,
                                    FisherLabels labels, std::uint64_t seed) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "Fisher estimate needs at least one sample");
  std::mt19937_64 rng(seed);
  std::vector<double> fisher(model.params().size(), 0.0);
  for (const auto* g : samples) {
    std::size_t y = static_cast<std::size_t>(g->label);
    if (labels == FisherLabels::Sampled) {
      const auto l = model.logits(*g);
      const double p1 = 1.0 / (1.0 + std::exp(l[0] - l[1]));
      y = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p1 ? 1 : 0;
    }
    const auto grad = model.nll_grad(*g, y);
    for (std::size_t i = 0; i < fisher.size(); ++i) fisher[i] += grad[i] * grad[i];
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (auto& v : fisher) v *= inv;
  return fisher;
}

namespace {

void check_fisher(std::span<const double> theta, const FisherState& fs) {
  if (theta.size() != fs.theta_star.size() || theta.size() != fs.fisher_diag.size()) {
    throw Error(ErrorCode::LengthMismatch, "EWC state does not match the parameter vector");
  }
}

}  // namespace

double ewc_penalty(std::span<const double> theta, const FisherState& fs) {
  check_fisher(theta, fs);
  double s = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double d = theta[i] - fs.theta_star[i];
    s += fs.fisher_diag[i] * d * d;
  }
  return 0.5 * fs.lambda * s;
}

std::vector<double> ewc_penalty_grad(std::span<const double> theta, const FisherState& fs) {
  check_fisher(theta, fs);
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    g[i] = fs.lambda * fs.fisher_diag[i] * (theta[i] - fs.theta_star[i]);
  }
  return g;
}

LossGrad ewc_loss(const DiffPoolModel& model, std::span<const PropagationGraph* const> batch,
                  const FisherState& fs) {
  LossGrad lg = batch_loss_grad(model, batch);
  const auto theta = model.params().values();
  lg.loss += ewc_penalty(theta, fs);
  const auto pg = ewc_penalty_grad(theta, fs);
  for (std::size_t i = 0; i < pg.size(); ++i) lg.grad[i] += pg[i];
  return lg;
}

IncrementalResult train_incremental(DiffPoolModel& model, const IncrementalData& data,
                                    const IncrementalParams& params) {
  for (const auto* g : data.train2) {
    if (g->features.cols != model.config().input_dim) {
      throw Error(ErrorCode::ArchitectureMismatch,
                  "task-2 graphs have feature dimension " + std::to_string(g->features.cols) +
                      ", model expects " + std::to_string(model.config().input_dim));
    }
  }

  IncrementalResult result;
  result.theta_start = model.params().flatten();
  const TrainConfig& tc = params.train;
  if (tc.epochs == 0 || data.train2.empty()) return result;

  std::optional<EpisodicMemory> memory;
  std::optional<GemLearner> gem;
  std::optional<FisherState> fisher;
  switch (params.method) {
    case ContinualMethod::Gem:
      memory = sample_memory(data.pool1, params.mem_size, mix_seed(tc.seed, 1), model);
      result.ref_loss = memory->ref_loss;
      gem.emplace(*memory, tc.adam, params.gem_tolerance, params.gem_rollback);
      break;
    case ContinualMethod::Ewc: {
      const auto idx = sample_indices(data.pool1.size(), params.fisher_samples, mix_seed(tc.seed, 2));
      GraphRefs samples;
      for (auto i : idx) samples.push_back(data.pool1[i]);
      fisher = FisherState{result.theta_start,
                           estimate_fisher(model, samples, params.fisher_labels, mix_seed(tc.seed, 3)),
                           params.lambda};
      break;
    }
    case ContinualMethod::Naive: break;
  }

  const bool harmonic_stop =
      params.method == ContinualMethod::Ewc && !data.val1.empty() && !data.val2.empty();
  const std::size_t patience = harmonic_stop ? params.ewc_patience : tc.patience;

  std::mt19937_64 rng(tc.seed);
  AdamState adam;
  GraphRefs order = data.train2;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<double> best_params = result.theta_start;
  std::size_t stale = 0;
  std::size_t violations_so_far = 0;

  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (const auto& batch : make_batches(order, tc.batch_size)) {
      double loss = 0.0;
      if (gem) {
        const GemStepResult r = gem->step(model, batch);
        loss = r.batch_loss;
        if (r.accepted) ++result.accepted_steps;
      } else {
        const LossGrad lg = fisher ? ewc_loss(model, batch, *fisher) : batch_loss_grad(model, batch);
        loss = lg.loss;
        adam_step(model.params().values(), lg.grad, adam, tc.adam);
      }
      total += loss * static_cast<double>(batch.size());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(order.size());
    if (!data.eval1.empty()) rec.task1 = evaluate(model, data.eval1);
    if (!data.eval2.empty()) rec.task2 = evaluate(model, data.eval2);
    if (gem) {
      rec.memory_loss = gem->memory_loss();
      rec.constraint_violations = gem->violations() - violations_so_far;
      violations_so_far = gem->violations();
      if (rec.memory_loss > memory->ref_loss + params.gem_tolerance) ++result.epoch_audit_violations;
    }
    result.history.push_back(rec);

    double score;
    if (harmonic_stop) {
      const double a1 = evaluate(model, data.val1).accuracy;
      const double a2 = evaluate(model, data.val2).accuracy;
      score = a1 + a2 == 0.0 ? 0.0 : 2.0 * a1 * a2 / (a1 + a2);
    } else {
      score = -rec.train_loss;
    }
    if (score > best_score) {
      best_score = score;
      best_params = model.params().flatten();
      result.best_epoch = epoch;
      stale = 0;
    } else if (patience > 0 && ++stale >= patience) {
      break;
    }
  }
  model.params().unflatten(best_params);

  if (gem) {
    result.rejected_steps = gem->rejected();
    result.violating_steps = gem->violations();
    result.projected_steps = gem->projected();
    result.max_memory_loss = result.accepted_steps > 0 ? gem->max_accepted_memory_loss() : memory->ref_loss;
  }
  return result;
}

}  // namespace cascadecl
