#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numeric>

#include "ccgl/encoder.hpp"
#include "ccgl/graph.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

namespace ccgl {
namespace {

TEST(InitParams, DeterministicAndBounded) {
  const auto a = init_params(4, 3, 2, 7);
  const auto b = init_params(4, 3, 2, 7);
  EXPECT_EQ(a.w1, b.w1);
  EXPECT_EQ(a.w2, b.w2);
  EXPECT_LE(a.w1.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 7.0));
  EXPECT_LE(a.w2.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 5.0));
  EXPECT_NE(init_params(4, 3, 2, 8).w1, a.w1);
}

TEST(InitParams, RejectsZeroDimensions) {
  EXPECT_THROW(init_params(0, 3, 2, 1), ShapeError);
  EXPECT_THROW(init_params(3, 0, 2, 1), ShapeError);
  EXPECT_THROW(init_params(3, 2, 0, 1), ShapeError);
}

TEST(InitParams, EmpiricalMeanNearZero) {
  // 10000 x 1 layer: uniform(-b, b) has sd b/sqrt(3); the mean estimator has
  // sd b/sqrt(3 * 10000).
  const auto p = init_params(10000, 1, 1, 3);
  const double bound = std::sqrt(6.0 / 10001.0);
  const double sigma = bound / std::sqrt(3.0 * 10000.0);
  EXPECT_LT(std::abs(p.w1.mean()), 3.0 * sigma);
}

TEST(Encode, SingleNodeIdentityWeights) {
  Matrix x(1, 2);
  x << 1, 2;
  EncoderParams p{Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  const auto z = encode(normalize_adjacency(1, {}), x, p);
  EXPECT_NEAR(z(0, 0), 1.0 / std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(z(0, 1), 2.0 / std::sqrt(5.0), 1e-12);
}

TEST(Encode, PermutationEquivariant) {
  Rng rng(4);
  const int n = 8;
  const std::vector<Edge> edges = {{0, 1}, {1, 2}, {2, 5}, {3, 4}, {4, 7}, {0, 6}, {5, 6}};
  const Matrix x = testing::random_matrix(rng, n, 5, 0.0, 1.0);
  const auto p = init_params(5, 6, 3, 1);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[1], perm[4]);
  std::vector<Edge> pedges;
  for (auto e : edges) pedges.push_back({perm[e.u], perm[e.v]});
  Matrix px(n, 5);
  for (int i = 0; i < n; ++i) px.row(perm[i]) = x.row(i);

  const auto z = encode(normalize_adjacency(n, edges), x, p);
  const auto pz = encode(normalize_adjacency(n, canonicalize_edges(pedges)), px, p);
  for (int i = 0; i < n; ++i) EXPECT_LT((z.row(i) - pz.row(perm[i])).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Encode, CoraShapedRowsAreUnit) {
  const int n = 2708, d = 1433;
  Rng rng(5);
  std::vector<Edge> edges;
  for (int i = 0; i < 5429; ++i)
    edges.push_back({static_cast<NodeId>(rng.below(n)), static_cast<NodeId>(rng.below(n))});
  Matrix x = Matrix::Zero(n, d);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < 18; ++t) x(i, static_cast<Eigen::Index>(rng.below(d))) = 1.0;
  const auto z = encode(normalize_adjacency(n, canonicalize_edges(edges)), x, init_params(d, 256, 64, 2));
  ASSERT_EQ(z.rows(), n);
  ASSERT_EQ(z.cols(), 64);
  EXPECT_LT((z.rowwise().norm().array() - 1.0).abs().maxCoeff(), 1e-6);
}

TEST(Encode, ZeroEmbeddingRowIsAnError) {
  // node 1 is isolated with zero features
  Matrix x(2, 2);
  x << 1, 1, 0, 0;
  EXPECT_THROW(encode(normalize_adjacency(2, {}), x, init_params(2, 3, 2, 1)), NumericalError);
}

TEST(Encode, GradientReachesWeights) {
  Rng rng(8);
  const int n = 6;
  const Matrix x = testing::random_matrix(rng, n, 4, 0.0, 1.0);
  auto adj = std::make_shared<const SparseMatrix>(normalize_adjacency(n, {{0, 1}, {1, 2}, {3, 4}, {4, 5}}));
  auto ax = propagate_features(*adj, x);
  const auto p = init_params(4, 5, 3, 3);
  const Matrix w = testing::random_matrix(rng, n, 3);
  auto loss = [&](ad::Tape& t, ad::Var w1, ad::Var w2) {
    return t.full_sum(t.mul(encode(t, adj, ax, w1, w2), t.constant(w)));
  };
  ad::Tape t;
  auto w1 = t.leaf(p.w1), w2 = t.leaf(p.w2);
  const auto g = t.gradient(loss(t, w1, w2), {w1, w2});
  const auto fd1 = testing::finite_difference(
      [&](const Matrix& m) {
        ad::Tape s;
        return loss(s, s.constant(m), s.constant(p.w2)).scalar();
      },
      p.w1);
  const auto fd2 = testing::finite_difference(
      [&](const Matrix& m) {
        ad::Tape s;
        return loss(s, s.constant(p.w1), s.constant(m)).scalar();
      },
      p.w2);
  EXPECT_LT(testing::relative_error(g[0], fd1), 1e-4);
  EXPECT_LT(testing::relative_error(g[1], fd2), 1e-4);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  Matrix w = Matrix::Constant(2, 2, 0.3);
  AdamState s;
  adam_step({&w}, {Matrix::Zero(2, 2)}, s);
  EXPECT_EQ(w, Matrix::Constant(2, 2, 0.3));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Matrix w = Matrix::Zero(2, 3);
  Matrix g(2, 3);
  g << 0.5, -2.0, 1e-3, -7.0, 3.0, -0.25;
  AdamState s(AdamOptions{.lr = 0.01});
  adam_step({&w}, {g}, s);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    EXPECT_NEAR(w.data()[i], -0.01 * (g.data()[i] > 0 ? 1.0 : -1.0), 1e-6);
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, MonotoneDescentOnQuadratic) {
  Rng rng(2);
  Matrix w = testing::random_matrix(rng, 3, 3);
  AdamState s(AdamOptions{.lr = 0.01});
  double prev = w.squaredNorm();
  for (int it = 0; it < 100; ++it) {
    adam_step({&w}, {Matrix(2.0 * w)}, s);
    const double cur = w.squaredNorm();
    EXPECT_LT(cur, prev) << "step " << it;
    prev = cur;
  }
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  EncoderParams p = init_params(2, 2, 2, 1);
  AdamState s;
  Matrix bad = Matrix::Zero(2, 2);
  bad(1, 1) = std::nan("");
  try {
    adam_step(p, {Matrix::Zero(2, 2), bad}, s);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("W2"), std::string::npos);
  }
}

TEST(Checkpoint, RoundTripThroughFloat32) {
  testing::TempDir tmp;
  const auto p = init_params(5, 4, 3, 6);
  save_checkpoint(p, AdamOptions{}, tmp.path() / "params");
  const auto back = load_checkpoint(tmp.path() / "params");
  EXPECT_EQ(back.w1, p.w1.cast<float>().cast<double>());
  EXPECT_EQ(back.w2, p.w2.cast<float>().cast<double>());
}

}  // namespace
}  // namespace ccgl
