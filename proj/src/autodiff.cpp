#include "cascadecl/autodiff.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "cascadecl/error.hpp"

namespace cascadecl {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap view(const Tensor2& t) { return ConstMap(t.data().data(), t.rows(), t.cols()); }
MutMap view(Tensor2& t) { return MutMap(t.data().data(), t.rows(), t.cols()); }

std::string shape(const Tensor2& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

[[noreturn]] void shape_error(const char* op, const Tensor2& a, const Tensor2& b) {
  throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": " + shape(a) + " vs " + shape(b));
}

Tape& same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw Error(ErrorCode::ShapeMismatch, "operands live on different tapes");
  a.tape().check(a);
  b.tape().check(b);
  return a.tape();
}

}  // namespace

const Tensor2& Var::value() const { return tape_->value_of(id_); }

void Tape::check(const Var& v) const {
  if (v.tape_ != this || v.generation_ != generation_ || v.id_ >= nodes_.size()) {
    throw Error(ErrorCode::DisconnectedLoss, "variable does not belong to the live tape");
  }
}

Var Tape::record(Tensor2 value, std::vector<std::uint32_t> inputs, BackwardFn backward) {
  require_finite(value.data(), "primitive result");
  Node node;
  node.value = std::move(value);
  for (auto id : inputs) node.requires_grad = node.requires_grad || nodes_[id].requires_grad;
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1), generation_);
}

Var Tape::leaf(Tensor2 value) {
  const bool rg = value.requires_grad();
  Var v = record(std::move(value), {}, nullptr);
  nodes_[v.id_].requires_grad = rg;
  return v;
}

Var Tape::constant(Tensor2 value) { return leaf(std::move(value.set_requires_grad(false))); }

Var Tape::parameter(Tensor2 value) { return leaf(std::move(value.set_requires_grad(true))); }

Tensor2& Tape::grad_slot(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor2(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::clear() {
  nodes_.clear();
  ++generation_;
}

std::vector<Tensor2> Tape::backward(const Var& loss, std::span<const Var> wrt) {
  check(loss);
  Node& root = nodes_[loss.id_];
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw Error(ErrorCode::DisconnectedLoss, "loss must be a 1x1 scalar, got " + shape(root.value));
  }
  if (!root.requires_grad) {
    throw Error(ErrorCode::DisconnectedLoss, "loss does not depend on any parameter");
  }
  for (const auto& w : wrt) check(w);

  grad_slot(loss.id_)(0, 0) = 1.0;
  for (std::uint32_t id = loss.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, id);
  }

  std::vector<Tensor2> grads;
  grads.reserve(wrt.size());
  for (const auto& w : wrt) {
    Node& n = nodes_[w.id_];
    grads.push_back(n.has_grad ? std::move(n.grad) : Tensor2(n.value.rows(), n.value.cols()));
  }
  clear();
  return grads;
}

Var matmul(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  const Tensor2& av = a.value();
  const Tensor2& bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  Tensor2 out(av.rows(), bv.cols());
  view(out).noalias() = view(av) * view(bv);
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::uint32_t self) {
    const auto g = view(t.grad_of(self));
    if (t.needs_grad(ia)) view(t.grad_slot(ia)).noalias() += g * view(t.value_of(ib)).transpose();
    if (t.needs_grad(ib)) view(t.grad_slot(ib)).noalias() += view(t.value_of(ia)).transpose() * g;
  });
}

Var add(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  if (!a.value().same_shape(b.value())) shape_error("add", a.value(), b.value());
  Tensor2 out(a.rows(), a.cols());
  view(out) = view(a.value()) + view(b.value());
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::uint32_t self) {
    const auto g = view(t.grad_of(self));
    if (t.needs_grad(ia)) view(t.grad_slot(ia)) += g;
    if (t.needs_grad(ib)) view(t.grad_slot(ib)) += g;
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  if (!a.value().same_shape(b.value())) shape_error("sub", a.value(), b.value());
  Tensor2 out(a.rows(), a.cols());
  view(out) = view(a.value()) - view(b.value());
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::uint32_t self) {
    const auto g = view(t.grad_of(self));
    if (t.needs_grad(ia)) view(t.grad_slot(ia)) += g;
    if (t.needs_grad(ib)) view(t.grad_slot(ib)) -= g;
  });
}

Var relu(const Var& a) {
  Tape& tape = a.tape();
  tape.check(a);
  Tensor2 out(a.rows(), a.cols());
  view(out) = view(a.value()).cwiseMax(0.0);
  const auto ia = a.id();
  return tape.record(std::move(out), {ia}, [ia](Tape& t, std::uint32_t self) {
    const auto& x = t.value_of(ia).storage();
    const auto& g = t.grad_of(self).storage();
    auto& gi = t.grad_slot(ia).storage();
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (x[k] > 0.0) gi[k] += g[k];
    }
  });
}

Var row_softmax(const Var& a) {
  Tape& tape = a.tape();
  tape.check(a);
  const Tensor2& x = a.value();
  Tensor2 out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mx = x(r, 0);
    for (std::size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, x(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) z += (out(r, c) = std::exp(x(r, c) - mx));
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) /= z;
  }
  const auto ia = a.id();
  return tape.record(std::move(out), {ia}, [ia](Tape& t, std::uint32_t self) {
    const Tensor2& y = t.value_of(self);
    const Tensor2& g = t.grad_of(self);
    Tensor2& gi = t.grad_slot(ia);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) gi(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Var mean_rows(const Var& a) {
  Tape& tape = a.tape();
  tape.check(a);
  if (a.rows() == 0) throw Error(ErrorCode::ShapeMismatch, "mean_rows of an empty tensor");
  Tensor2 out(1, a.cols());
  view(out) = view(a.value()).colwise().mean();
  const auto ia = a.id();
  return tape.record(std::move(out), {ia}, [ia](Tape& t, std::uint32_t self) {
    Tensor2& gi = t.grad_slot(ia);
    const double inv = 1.0 / static_cast<double>(gi.rows());
    view(gi).rowwise() += view(t.grad_of(self)).row(0) * inv;
  });
}

Var scale(const Var& a, double c) {
  Tape& tape = a.tape();
  tape.check(a);
  Tensor2 out(a.rows(), a.cols());
  view(out) = view(a.value()) * c;
  const auto ia = a.id();
  return tape.record(std::move(out), {ia}, [ia, c](Tape& t, std::uint32_t self) {
    view(t.grad_slot(ia)) += view(t.grad_of(self)) * c;
  });
}

Var hadamard(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  if (!a.value().same_shape(b.value())) shape_error("hadamard", a.value(), b.value());
  Tensor2 out(a.rows(), a.cols());
  view(out) = view(a.value()).cwiseProduct(view(b.value()));
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::uint32_t self) {
    const auto g = view(t.grad_of(self));
    if (t.needs_grad(ia)) view(t.grad_slot(ia)) += g.cwiseProduct(view(t.value_of(ib)));
    if (t.needs_grad(ib)) view(t.grad_slot(ib)) += g.cwiseProduct(view(t.value_of(ia)));
  });
}

Var frobenius_sq(const Var& a) {
  Tape& tape = a.tape();
  tape.check(a);
  Tensor2 out(1, 1, view(a.value()).squaredNorm());
  const auto ia = a.id();
  return tape.record(std::move(out), {ia}, [ia](Tape& t, std::uint32_t self) {
    view(t.grad_slot(ia)) += view(t.value_of(ia)) * (2.0 * t.grad_of(self)(0, 0));
  });
}

Var cross_entropy(const Var& logits, std::size_t label) {
  Tape& tape = logits.tape();
  tape.check(logits);
  const Tensor2& x = logits.value();
  if (x.rows() != 1 || label >= x.cols()) {
    throw Error(ErrorCode::ShapeMismatch,
                "cross_entropy expects 1xk logits and label < k, got " + shape(x) +
                    " and label " + std::to_string(label));
  }
  double mx = x(0, 0);
  for (std::size_t c = 1; c < x.cols(); ++c) mx = std::max(mx, x(0, c));
  double z = 0.0;
  for (std::size_t c = 0; c < x.cols(); ++c) z += std::exp(x(0, c) - mx);
  const double lse = mx + std::log(z);
  Tensor2 out(1, 1, lse - x(0, label));
  const auto ia = logits.id();
  return tape.record(std::move(out), {ia}, [ia, label, lse](Tape& t, std::uint32_t self) {
    const Tensor2& xv = t.value_of(ia);
    const double g = t.grad_of(self)(0, 0);
    Tensor2& gi = t.grad_slot(ia);
    for (std::size_t c = 0; c < xv.cols(); ++c) {
      gi(0, c) += g * (std::exp(xv(0, c) - lse) - (c == label ? 1.0 : 0.0));
    }
  });
}

Var transpose(const Var& a) {
  Tape& tape = a.tape();
  tape.check(a);
  Tensor2 out(a.cols(), a.rows());
  view(out) = view(a.value()).transpose();
  const auto ia = a.id();
  return tape.record(std::move(out), {ia}, [ia](Tape& t, std::uint32_t self) {
    view(t.grad_slot(ia)) += view(t.grad_of(self)).transpose();
  });
}

Var col_slice(const Var& a, std::size_t count) {
  Tape& tape = a.tape();
  tape.check(a);
  if (count == 0 || count > a.cols()) {
    throw Error(ErrorCode::ShapeMismatch,
                "col_slice of " + std::to_string(count) + " columns from " + shape(a.value()));
  }
  Tensor2 out(a.rows(), count);
  view(out) = view(a.value()).leftCols(count);
  const auto ia = a.id();
  return tape.record(std::move(out), {ia}, [ia, count](Tape& t, std::uint32_t self) {
    view(t.grad_slot(ia)).leftCols(count) += view(t.grad_of(self));
  });
}

Var sym_normalize(const Var& a) {
  Tape& tape = a.tape();
  tape.check(a);
  const Tensor2& av = a.value();
  if (av.rows() != av.cols()) throw Error(ErrorCode::ShapeMismatch, "sym_normalize of " + shape(av));
  const std::size_t n = av.rows();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 1.0;
    for (std::size_t j = 0; j < n; ++j) d += av(i, j);
    if (!(d > 0.0)) throw Error(ErrorCode::NonFiniteInput, "non-positive degree in sym_normalize");
    s[i] = 1.0 / std::sqrt(d);
  }
  Tensor2 out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out(i, j) = s[i] * (av(i, j) + (i == j ? 1.0 : 0.0)) * s[j];
    }
  }
  const auto ia = a.id();
  return tape.record(std::move(out), {ia}, [ia, s = std::move(s)](Tape& t, std::uint32_t self) {
    const Tensor2& m = t.value_of(ia);
    const Tensor2& g = t.grad_of(self);
    Tensor2& gi = t.grad_slot(ia);
    const std::size_t n = m.rows();
    std::vector<double> dd(n, 0.0);  // dL/d(degree_i)
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double mij = m(i, j) + (i == j ? 1.0 : 0.0);
        const double term = g(i, j) * mij;
        dd[i] += term * s[j];
        dd[j] += term * s[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) dd[i] *= -0.5 * s[i] * s[i] * s[i];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) gi(i, k) += g(i, k) * s[i] * s[k] + dd[i];
    }
  });
}

Var row_entropy_mean(const Var& a) {
  Tape& tape = a.tape();
  tape.check(a);
  const Tensor2& p = a.value();
  if (p.rows() == 0) throw Error(ErrorCode::ShapeMismatch, "row_entropy_mean of an empty tensor");
  double h = 0.0;
  for (double v : p.storage()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  Tensor2 out(1, 1, h / static_cast<double>(p.rows()));
  const auto ia = a.id();
  return tape.record(std::move(out), {ia}, [ia](Tape& t, std::uint32_t self) {
    const auto& pv = t.value_of(ia).storage();
    auto& gi = t.grad_slot(ia).storage();
    const double g = t.grad_of(self)(0, 0) / static_cast<double>(t.value_of(ia).rows());
    for (std::size_t k = 0; k < pv.size(); ++k) {
      gi[k] -= g * (std::log(std::max(pv[k], 1e-300)) + 1.0);
    }
  });
}

}  // namespace cascadecl
