#include "cascadecl/params.hpp"

#include <algorithm>
#include <cmath>

#include "cascadecl/error.hpp"

namespace cascadecl {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::LengthMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

std::size_t ParamVector::add(std::string name, const Tensor2& init) {
  slots_.push_back(Slot{std::move(name), init.rows(), init.cols(), values_.size()});
  values_.insert(values_.end(), init.storage().begin(), init.storage().end());
  return slots_.size() - 1;
}

Tensor2 ParamVector::tensor(std::size_t index) const {
  const Slot& s = slots_.at(index);
  auto first = values_.begin() + static_cast<std::ptrdiff_t>(s.offset);
  return Tensor2(s.rows, s.cols,
                 std::vector<double>(first, first + static_cast<std::ptrdiff_t>(s.rows * s.cols)));
}

void ParamVector::unflatten(std::span<const double> flat) {
  require_same_length(flat.size(), values_.size(), "unflatten");
  std::copy(flat.begin(), flat.end(), values_.begin());
}

std::vector<double> ParamVector::flatten_like(std::span<const Tensor2> per_tensor) const {
  require_same_length(per_tensor.size(), slots_.size(), "flatten_like tensor count");
  std::vector<double> out(values_.size());
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const Slot& s = slots_[i];
    if (per_tensor[i].rows() != s.rows || per_tensor[i].cols() != s.cols) {
      throw Error(ErrorCode::LengthMismatch, "gradient shape differs for '" + s.name + "'");
    }
    std::copy(per_tensor[i].storage().begin(), per_tensor[i].storage().end(),
              out.begin() + static_cast<std::ptrdiff_t>(s.offset));
  }
  return out;
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
  require_same_length(params.size(), grads.size(), "sgd_step");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg) {
  require_same_length(params.size(), grads.size(), "adam_step");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  require_same_length(params.size(), state.m.size(), "adam_step moments");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace cascadecl
