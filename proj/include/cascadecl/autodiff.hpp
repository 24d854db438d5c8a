#pragma once

// Reverse-mode differentiation over Tensor2 values.
//
// A Tape records every primitive application in execution order; Var is a
// lightweight handle into it. backward() walks the records once in reverse,
// returns the requested gradients and clears the tape.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cascadecl/tensor.hpp"

namespace cascadecl {

class Tape;

class Var {
 public:
  Var() = default;

  const Tensor2& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::uint32_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id, std::uint64_t generation)
      : tape_(tape), id_(id), generation_(generation) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
  std::uint64_t generation_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf input; gradients flow to it when `value.requires_grad()`.
  Var leaf(Tensor2 value);
  Var constant(Tensor2 value);
  Var parameter(Tensor2 value);

  /// Gradient of scalar `loss` with respect to each of `wrt` (zeros when unreachable).
  /// Throws DisconnectedLoss when `loss` is not a live 1x1 record requiring grad.
  std::vector<Tensor2> backward(const Var& loss, std::span<const Var> wrt);

  void clear();
  std::size_t size() const { return nodes_.size(); }

  // Used by primitives.
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;
  Var record(Tensor2 value, std::vector<std::uint32_t> inputs, BackwardFn backward);
  const Tensor2& value_of(std::uint32_t id) const { return nodes_[id].value; }
  const Tensor2& grad_of(std::uint32_t id) const { return nodes_[id].grad; }
  bool needs_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  /// Gradient accumulator for input `id`; allocated zero on first access.
  Tensor2& grad_slot(std::uint32_t id);
  void check(const Var& v) const;

 private:
  friend class Var;
  struct Node {
    Tensor2 value;
    Tensor2 grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::vector<std::uint32_t> inputs;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::uint64_t generation_ = 1;
};

// Primitives. Shape violations throw ShapeMismatch.
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var relu(const Var& a);
Var row_softmax(const Var& a);
/// n x c -> 1 x c column means.
Var mean_rows(const Var& a);
Var scale(const Var& a, double c);
Var hadamard(const Var& a, const Var& b);
/// Sum of squared entries, 1 x 1.
Var frobenius_sq(const Var& a);
/// -log softmax(logits)[label] for a 1 x k row of logits.
Var cross_entropy(const Var& logits, std::size_t label);
Var transpose(const Var& a);
/// First `count` columns.
Var col_slice(const Var& a, std::size_t count);
/// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I; A must be non-negative.
Var sym_normalize(const Var& a);
/// Mean over rows of the Shannon entropy of each row (rows are distributions), 1 x 1.
Var row_entropy_mean(const Var& a);

}  // namespace cascadecl
