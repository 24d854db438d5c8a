#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "gtest/gtest.h"

#include "cascadecl/error.hpp"
#include "cascadecl/gnn.hpp"
#include "oracles.hpp"

using namespace cascadecl;

namespace {

PropagationGraph random_graph(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  PropagationGraph g;
  g.news_id = "g";
  g.n = n;
  g.features = FeatureMatrix(n, d);
  g.node_meta.resize(n);
  std::normal_distribution<double> f(0.0, 1.0);
  for (std::size_t r = 1; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) g.features.at(r, c) = f(rng);
  g.edges.emplace(0u, 1u);
  std::bernoulli_distribution e(0.3);
  for (std::uint32_t j = 2; j < n; ++j) {
    bool any = false;
    for (std::uint32_t i = 1; i < j; ++i) {
      if (e(rng)) {
        g.edges.emplace(i, j);
        any = true;
      }
    }
    if (!any) g.edges.emplace(0u, j);
  }
  return g;
}

// Relabels every node through `perm` (new index of old node i is perm[i]).
PropagationGraph permuted(const PropagationGraph& g, const std::vector<std::uint32_t>& perm) {
  PropagationGraph p = g;
  p.edges.clear();
  for (const auto& [i, j] : g.edges) p.edges.emplace(perm[i], perm[j]);
  for (std::size_t r = 0; r < g.n; ++r)
    for (std::size_t c = 0; c < g.dim(); ++c) p.features.at(perm[r], c) = g.features.at(r, c);
  return p;
}

ModelConfig small_config(std::size_t d) {
  ModelConfig c;
  c.input_dim = d;
  c.hidden_dim = 16;
  c.embed_dim = 16;
  c.max_nodes = 16;
  c.pool_layers = 2;
  c.seed = 9;
  return c;
}

oracle::Matrix to_matrix(const Tensor2& t) {
  oracle::Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t(i, j);
  return m;
}

}  // namespace

TEST(NormalizeAdjacency, SmallCases) {
  const auto one = normalize_adjacency(Tensor2(1, 1));
  EXPECT_DOUBLE_EQ(1.0, one(0, 0));
  const auto two = normalize_adjacency(Tensor2(2, 2, std::vector<double>{0, 1, 1, 0}));
  for (double v : two.storage()) EXPECT_DOUBLE_EQ(0.5, v);
}

TEST(DenseAdjacency, DirectedAndSymmetric) {
  PropagationGraph g;
  g.n = 3;
  g.edges = {{0, 1}, {1, 2}};
  const auto d = dense_adjacency(g, true);
  EXPECT_EQ(1.0, d(0, 1));
  EXPECT_EQ(0.0, d(1, 0));
  const auto s = dense_adjacency(g, false);
  EXPECT_EQ(1.0, s(1, 0));
  EXPECT_EQ(1.0, s(2, 1));
  EXPECT_EQ(0.0, s(0, 2));
}

TEST(Propagate, MatchesOracle) {
  std::mt19937_64 rng(5);
  auto g = random_graph(rng, 7, 3);
  const auto a = normalize_adjacency(dense_adjacency(g, false));
  std::vector<double> hv(21), wv(12);
  std::normal_distribution<double> f(0.0, 1.0);
  for (auto& x : hv) x = f(rng);
  for (auto& x : wv) x = f(rng);
  const Tensor2 h(7, 3, hv), w(3, 4, wv);
  auto expected = oracle::matmul(oracle::matmul(to_matrix(a), to_matrix(h)), to_matrix(w));
  Tape tape;
  const auto& got = propagate(tape.constant(a), tape.constant(h), tape.constant(w)).value();
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(std::max(0.0, expected[i][j]), got(i, j), 1e-12);
}

TEST(DiffPoolLevel, SingleClusterCollapses) {
  std::mt19937_64 rng(6);
  auto g = random_graph(rng, 6, 2);
  const auto a = dense_adjacency(g, false);
  Tape tape;
  Var z = tape.constant(Tensor2(6, 2, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}));
  const auto lvl = diffpool_level(tape.constant(a), z, tape.constant(Tensor2(6, 1, 0.3)));
  EXPECT_NEAR(std::accumulate(a.storage().begin(), a.storage().end(), 0.0), lvl.adjacency.value()(0, 0), 1e-12);
  EXPECT_NEAR(36.0, lvl.embeddings.value()(0, 0), 1e-12);
  EXPECT_NEAR(42.0, lvl.embeddings.value()(0, 1), 1e-12);
  EXPECT_NEAR(0.0, lvl.entropy_loss.value()(0, 0), 1e-12);
}

TEST(DiffPoolLevel, HardAssignmentSumsBlocks) {
  // nodes {0,1} -> cluster 0, {2,3} -> cluster 1; path 0-1-2-3
  const Tensor2 a(4, 4, std::vector<double>{0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0});
  const Tensor2 s(4, 2, std::vector<double>{60, -60, 60, -60, -60, 60, -60, 60});
  Tape tape;
  const auto lvl = diffpool_level(tape.constant(a), tape.constant(Tensor2(4, 1, 1.0)), tape.constant(s));
  const auto& p = lvl.adjacency.value();
  EXPECT_NEAR(2.0, p(0, 0), 1e-9);
  EXPECT_NEAR(1.0, p(0, 1), 1e-9);
  EXPECT_NEAR(2.0, p(1, 1), 1e-9);
  EXPECT_NEAR(2.0, lvl.embeddings.value()(1, 0), 1e-9);
  EXPECT_LT(lvl.entropy_loss.value()(0, 0), 1e-9);
  // ||A - SS^T||^2 = 4 ones on the diagonal blocks' diagonals + 2 off-block edges = 6
  EXPECT_NEAR(6.0 / 16.0, lvl.link_loss.value()(0, 0), 1e-9);
}

TEST(DiffPoolLevel, EntropyBounds) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> f(0.0, 3.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(5 * 3);
    for (auto& x : v) x = f(rng);
    Tape tape;
    const auto lvl = diffpool_level(tape.constant(Tensor2(5, 5)), tape.constant(Tensor2(5, 1)),
                                    tape.constant(Tensor2(5, 3, v)));
    const double h = lvl.entropy_loss.value()(0, 0);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(3.0) + 1e-12);
  }
  Tape tape;
  const auto uniform = diffpool_level(tape.constant(Tensor2(3, 3)), tape.constant(Tensor2(3, 1)),
                                      tape.constant(Tensor2(3, 2)));
  EXPECT_NEAR(std::log(2.0), uniform.entropy_loss.value()(0, 0), 1e-12);
}

TEST(PooledSize, WidthsAndClamp) {
  EXPECT_EQ(3u, pooled_size(10, 0.25, 100));
  EXPECT_EQ(1u, pooled_size(1, 0.25, 100));
  EXPECT_EQ(4u, pooled_size(100, 0.25, 4));
  ModelConfig c;
  c.max_nodes = 128;
  EXPECT_EQ((std::vector<std::size_t>{32, 8, 2}), c.cluster_widths());
}

TEST(DiffPoolModel, PermutationInvariant) {
  std::mt19937_64 rng(10);
  const DiffPoolModel model(small_config(3));
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 14)(rng);
    const auto g = random_graph(rng, n, 3);
    const auto base = model.logits(g);
    for (int p = 0; p < 5; ++p) {
      std::vector<std::uint32_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0u);
      std::shuffle(perm.begin(), perm.end(), rng);
      const auto l = model.logits(permuted(g, perm));
      EXPECT_NEAR(base[0], l[0], 1e-9);
      EXPECT_NEAR(base[1], l[1], 1e-9);
    }
  }
}

TEST(DiffPoolModel, ZeroWeightsGiveUniformPrediction) {
  std::mt19937_64 rng(12);
  DiffPoolModel model(small_config(3));
  auto flat = model.params().flatten();
  std::fill(flat.begin(), flat.end(), 0.0);
  model.params().unflatten(flat);
  auto g = random_graph(rng, 6, 3);
  g.label = Label::Fake;
  const auto l = model.logits(g);
  EXPECT_EQ(l[0], l[1]);
  const auto lg = model.loss_grad(g);
  EXPECT_NEAR(std::log(2.0), lg.cross_entropy, 1e-12);
}

TEST(DiffPoolModel, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  DiffPoolModel model(small_config(2));
  auto g = random_graph(rng, 9, 2);
  g.label = Label::Fake;
  const auto lg = model.loss_grad(g);
  EXPECT_NEAR(model.loss(g), lg.loss, 1e-12);
  const auto theta = model.params().flatten();
  auto f = [&](const std::vector<double>& v) {
    DiffPoolModel m = model;
    m.params().unflatten(v);
    return m.loss(g);
  };
  EXPECT_LT(oracle::max_rel_err(lg.grad, oracle::numeric_grad(f, theta)), 1e-4);
}

TEST(DiffPoolModel, DeterministicInit) {
  auto c = small_config(4);
  EXPECT_EQ(DiffPoolModel(c).params().flatten(), DiffPoolModel(c).params().flatten());
  c.seed = 10;
  EXPECT_NE(DiffPoolModel(small_config(4)).params().flatten(), DiffPoolModel(c).params().flatten());
}

TEST(DiffPoolModel, InputErrors) {
  std::mt19937_64 rng(14);
  const DiffPoolModel model(small_config(3));
  const auto wrong = random_graph(rng, 4, 5);
  try {
    model.predict(wrong);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::DimensionMismatch, e.code());
  }
  PropagationGraph empty;
  empty.features = FeatureMatrix(0, 3);
  EXPECT_THROW(model.predict(empty), Error);
  auto bad = small_config(3);
  bad.pool_ratio = 1.5;
  EXPECT_THROW(DiffPoolModel{bad}, Error);
}
