#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "gtest/gtest.h"

#include "cascadecl/autodiff.hpp"
#include "cascadecl/error.hpp"
#include "cascadecl/params.hpp"
#include "oracles.hpp"

using namespace cascadecl;

namespace {

Tensor2 random_tensor(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(r * c);
  for (auto& x : v) x = u(rng);
  return Tensor2(r, c, v);
}

Tensor2 param(std::size_t r, std::size_t c, std::vector<double> v) {
  Tensor2 t(r, c, std::move(v));
  t.set_requires_grad(true);
  return t;
}

struct Shapes {
  std::size_t n = 5, d = 4, h = 3, k = 2;
};

// Touches every primitive once; parameters are A (n x n, positive), X, W, P.
Var composite(Tape& tape, const std::vector<Tensor2>& p, std::vector<Var>* vars) {
  Var a = tape.parameter(p[0]);
  Var x = tape.parameter(p[1]);
  Var w = tape.parameter(p[2]);
  Var q = tape.parameter(p[3]);
  if (vars) *vars = {a, x, w, q};
  Var an = sym_normalize(a);
  Var h = relu(matmul(an, matmul(x, w)));
  Var s = row_softmax(matmul(x, q));
  Var pooled = matmul(transpose(s), h);
  Var logits = col_slice(mean_rows(add(pooled, scale(hadamard(pooled, pooled), 0.3))), 2);
  Var link = frobenius_sq(sub(an, matmul(s, transpose(s))));
  Var loss = add(add(cross_entropy(logits, 1), scale(link, 0.1)), scale(row_entropy_mean(s), 0.2));
  return loss;
}

}  // namespace

TEST(Autodiff, ReluAndItsGradient) {
  Tape tape;
  Var x = tape.parameter(param(1, 3, {-1.0, 2.0, 0.5}));
  Var y = relu(x);
  EXPECT_EQ((std::vector<double>{0.0, 2.0, 0.5}), y.value().storage());
  const auto g = tape.backward(frobenius_sq(y), std::vector<Var>{x});
  EXPECT_EQ((std::vector<double>{0.0, 4.0, 1.0}), g[0].storage());
}

TEST(Autodiff, SoftmaxRowsSumToOne) {
  Tape tape;
  Var x = tape.constant(Tensor2(2, 3, {0.0, 0.0, 0.0, 1000.0, 0.0, -1000.0}));
  const auto& s = row_softmax(x).value();
  EXPECT_NEAR(1.0 / 3.0, s(0, 0), 1e-15);
  EXPECT_NEAR(1.0, s(1, 0), 1e-15);
  EXPECT_TRUE(std::isfinite(s(1, 2)));
}

TEST(Autodiff, MatmulMatchesTripleLoop) {
  std::mt19937_64 rng(3);
  const auto a = random_tensor(rng, 4, 6), b = random_tensor(rng, 6, 3);
  oracle::Matrix ma(4, std::vector<double>(6)), mb(6, std::vector<double>(3));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 6; ++j) ma[i][j] = a(i, j);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 3; ++j) mb[i][j] = b(i, j);
  const auto expected = oracle::matmul(ma, mb);
  Tape tape;
  const auto& c = matmul(tape.constant(a), tape.constant(b)).value();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(expected[i][j], c(i, j), 1e-12);
}

TEST(Autodiff, ScalarWeightGradient) {
  Tape tape;
  Var x = tape.constant(Tensor2(1, 1, std::vector<double>{6.0}));
  Var w = tape.parameter(param(1, 1, {0.25}));
  const auto g = tape.backward(matmul(x, w), std::vector<Var>{w});
  EXPECT_EQ(6.0, g[0](0, 0));
}

TEST(Autodiff, CrossEntropyGradient) {
  Tape tape;
  Var z = tape.parameter(param(1, 2, {0.0, 0.0}));
  Var loss = cross_entropy(z, 0);
  EXPECT_NEAR(std::log(2.0), loss.value()(0, 0), 1e-15);
  const auto g = tape.backward(loss, std::vector<Var>{z});
  EXPECT_NEAR(-0.5, g[0](0, 0), 1e-15);
  EXPECT_NEAR(0.5, g[0](0, 1), 1e-15);
}

TEST(Autodiff, CompositeMatchesFiniteDifferences) {
  const Shapes sh;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<Tensor2> p{random_tensor(rng, sh.n, sh.n, 0.1, 1.0), random_tensor(rng, sh.n, sh.d),
                           random_tensor(rng, sh.d, sh.h), random_tensor(rng, sh.d, sh.k)};
    std::vector<double> flat;
    for (const auto& t : p) flat.insert(flat.end(), t.storage().begin(), t.storage().end());
    auto unpack = [&](const std::vector<double>& v) {
      std::vector<Tensor2> out;
      std::size_t off = 0;
      for (const auto& t : p) {
        out.emplace_back(t.rows(), t.cols(), std::vector<double>(v.begin() + off, v.begin() + off + t.size()));
        off += t.size();
      }
      return out;
    };
    auto f = [&](const std::vector<double>& v) {
      Tape tape;
      return composite(tape, unpack(v), nullptr).value()(0, 0);
    };
    Tape tape;
    std::vector<Var> vars;
    Var loss = composite(tape, p, &vars);
    const auto g = tape.backward(loss, vars);
    std::vector<double> analytic;
    for (const auto& t : g) analytic.insert(analytic.end(), t.storage().begin(), t.storage().end());
    const auto numeric = oracle::numeric_grad(f, flat);
    EXPECT_LT(oracle::max_rel_err(analytic, numeric), 1e-4) << "seed " << seed;
  }
}

TEST(Autodiff, UnreachableInputGetsZeros) {
  Tape tape;
  Var x = tape.parameter(param(1, 2, {1.0, 2.0}));
  Var unused = tape.parameter(param(2, 2, {1, 2, 3, 4}));
  const auto g = tape.backward(frobenius_sq(x), std::vector<Var>{x, unused});
  EXPECT_EQ((std::vector<double>{2.0, 4.0}), g[0].storage());
  EXPECT_EQ((std::vector<double>(4, 0.0)), g[1].storage());
}

TEST(Autodiff, Errors) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    Tensor2(1, 2, std::vector<double>{1.0, nan});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::NonFiniteInput, e.code());
  }
  Tape tape;
  try {
    matmul(tape.constant(Tensor2(2, 3)), tape.constant(Tensor2(2, 3)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::ShapeMismatch, e.code());
  }
  Var c = frobenius_sq(tape.constant(Tensor2(2, 2, 1.0)));
  try {
    tape.backward(c, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::DisconnectedLoss, e.code());
  }
  Var x = tape.parameter(param(1, 1, {1.0}));
  Var loss = frobenius_sq(x);
  tape.clear();
  EXPECT_THROW(tape.backward(loss, std::vector<Var>{x}), Error);
}

TEST(Params, SgdStep) {
  std::vector<double> p{1.0};
  sgd_step(p, std::vector<double>{2.0}, 0.1);
  EXPECT_DOUBLE_EQ(0.8, p[0]);
}

TEST(Params, AdamFirstStepIsLearningRate) {
  std::vector<double> p{1.0, -1.0};
  AdamState st;
  adam_step(p, std::vector<double>{3.0, -0.02}, st, AdamConfig{0.01});
  EXPECT_NEAR(0.99, p[0], 1e-8);
  EXPECT_NEAR(-0.99, p[1], 1e-6);
  EXPECT_EQ(1u, st.step);
}

TEST(Params, FlattenRoundTrip) {
  ParamVector pv;
  pv.add("w", Tensor2(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6}));
  pv.add("b", Tensor2(1, 3, std::vector<double>{7, 8, 9}));
  EXPECT_EQ(9u, pv.size());
  EXPECT_EQ(6u, pv.slots()[1].offset);
  auto flat = pv.flatten();
  flat[7] = -8;
  pv.unflatten(flat);
  EXPECT_EQ(-8.0, pv.tensor(1)(0, 1));
  EXPECT_EQ(4.0, pv.tensor(0)(1, 0));
  EXPECT_THROW(pv.unflatten(std::vector<double>(3)), Error);
}
