#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "ugcn/nn.hpp"
#include "ugcn/skeleton.hpp"

using namespace ugcn;

namespace {

oracle::Array4 to_array(const Tensor& t) {
  oracle::Array4 a(t.dim(0), t.dim(1), t.dim(2), t.dim(3));
  a.v = t.vec();
  return a;
}

SkeletonTopology random_tree(std::size_t M, std::mt19937_64& rng) {
  std::vector<JointPair> edges;
  for (std::size_t j = 1; j < M; ++j) edges.emplace_back(std::uniform_int_distribution<std::size_t>(0, j - 1)(rng), j);
  const std::size_t root = std::uniform_int_distribution<std::size_t>(0, M - 1)(rng);
  return build_topology(M, edges, root, identity_mirror(M));
}

}  // namespace

TEST(SpatialGraphConv, MatchesBruteForceOnRandomInstances) {
  std::mt19937_64 rng(11);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t M = 2 + rng() % 6, C = 1 + rng() % 3, O = 1 + rng() % 3, T = 1 + rng() % 4, N = 1 + rng() % 2;
    const auto topo = random_tree(M, rng);
    const auto A = partition_adjacency(topo);
    Tensor x = Tensor::normal({N, C, T, M}, 1.0, rng);
    std::array<Var, 3> W;
    std::array<std::vector<std::vector<double>>, 3> Wv;
    for (std::size_t l = 0; l < 3; ++l) {
      W[l] = Var::constant(Tensor::normal({O, C}, 1.0, rng));
      Wv[l].assign(O, std::vector<double>(C));
      for (std::size_t o = 0; o < O; ++o)
        for (std::size_t c = 0; c < C; ++c) Wv[l][o][c] = W[l].value()[o * C + c];
    }
    const Tensor got = spatial_graph_conv(Var::constant(x), A, W).value();
    const auto want = oracle::spatial_graph_conv(to_array(x), oracle::adjacency(M, topo.edges(), topo.root()), Wv);
    ASSERT_EQ(got.size(), want.v.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want.v[i], 1e-9) << "instance " << inst;
  }
}

TEST(SpatialGraphConv, RejectsJointMismatch) {
  const auto A = partition_adjacency(human17_topology());
  std::array<Var, 3> W{Var::constant(Tensor({2, 2})), Var::constant(Tensor({2, 2})), Var::constant(Tensor({2, 2}))};
  EXPECT_THROW(spatial_graph_conv(Var::constant(Tensor({1, 2, 4, 5})), A, W), ShapeMismatch);
}

TEST(ConvTime, MatchesBruteForceBothStrides) {
  std::mt19937_64 rng(5);
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t N = 1 + rng() % 2, C = 1 + rng() % 3, O = 1 + rng() % 3, T = 1 + rng() % 9, M = 1 + rng() % 3;
    const std::size_t K = 1 + 2 * (rng() % 3), stride = 1 + rng() % 2;
    Tensor x = Tensor::normal({N, C, T, M}, 1.0, rng), w = Tensor::normal({O, C, K}, 1.0, rng),
           b = Tensor::normal({O}, 1.0, rng);
    const Tensor got = conv_time(Var::constant(x), Var::constant(w), stride, Var::constant(b)).value();
    std::vector<std::vector<std::vector<double>>> wv(O, std::vector<std::vector<double>>(C, std::vector<double>(K)));
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t k = 0; k < K; ++k) wv[o][c][k] = w[(o * C + c) * K + k];
    const auto want = oracle::conv_time(to_array(x), wv, stride, b.vec());
    ASSERT_EQ(got.shape(), (Shape{N, O, (T + stride - 1) / stride, M}));
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want.v[i], 1e-9);
  }
}

TEST(BatchNorm, TrainModeNormalizesAndUpdatesRunningStats) {
  std::mt19937_64 rng(2);
  Tensor x = Tensor::normal({3, 2, 5, 4}, 2.0, rng);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += 7.0;
  auto p = BatchNormParams::create(2);
  const Tensor y = batch_norm(Var::constant(x), p, Mode::train).value();
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0, v = 0, xm = 0;
    for (std::size_t n = 0; n < 3; ++n)
      for (std::size_t i = 0; i < 20; ++i) {
        m += y[(n * 2 + c) * 20 + i] / 60.0;
        xm += x[(n * 2 + c) * 20 + i] / 60.0;
      }
    for (std::size_t n = 0; n < 3; ++n)
      for (std::size_t i = 0; i < 20; ++i) v += (y[(n * 2 + c) * 20 + i] - m) * (y[(n * 2 + c) * 20 + i] - m) / 60.0;
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-4);  // eps = 1e-5 shrinks it slightly
    EXPECT_NEAR(p.running_mean[c], 0.1 * xm, 1e-12);
  }
}

TEST(BatchNorm, EvalModeUsesRunningStats) {
  auto p = BatchNormParams::create(1);
  p.running_mean[0] = 2.0;
  p.running_var[0] = 4.0 - 1e-5;
  const Tensor y = batch_norm(Var::constant(Tensor({1, 1, 1, 2}, std::vector<double>{2.0, 6.0})), p, Mode::eval).value();
  EXPECT_NEAR(y[0], 0.0, 1e-12);
  EXPECT_NEAR(y[1], 2.0, 1e-12);
}

TEST(Dropout, InvertedScalingAndDeterminism) {
  Tensor x({1, 1, 1, 20000}, 1.0);
  const Tensor a = dropout(Var::constant(x), 0.3, Mode::train, 9).value();
  const Tensor b = dropout(Var::constant(x), 0.3, Mode::train, 9).value();
  EXPECT_EQ(a.vec(), b.vec());
  double mean = 0.0;
  std::size_t zeros = 0;
  for (double v : a.vec()) {
    mean += v / 20000.0;
    if (v == 0.0) ++zeros;
    else EXPECT_NEAR(v, 1.0 / 0.7, 1e-12);
  }
  EXPECT_NEAR(mean, 1.0, 0.03);
  EXPECT_NEAR(zeros / 20000.0, 0.3, 0.02);
  EXPECT_EQ(dropout(Var::constant(x), 0.3, Mode::eval, 9).value().vec(), x.vec());
  EXPECT_THROW(dropout(Var::constant(x), 1.0, Mode::train, 9), InvalidConfig);
}

TEST(TemporalUpsample, RepeatsEachFrameTwice) {
  Tensor x({1, 1, 3, 2}, std::vector<double>{1, 2, 3, 4, 5, 6});
  const Tensor y = temporal_upsample(Var::constant(x)).value();
  ASSERT_EQ(y.shape(), (Shape{1, 1, 6, 2}));
  EXPECT_EQ(y.vec(), (std::vector<double>{1, 2, 1, 2, 3, 4, 3, 4, 5, 6, 5, 6}));
}

TEST(StgcnBlock, StridedBlockHalvesTime) {
  std::mt19937_64 rng(1);
  const auto topo = human17_topology();
  const auto A = partition_adjacency(topo);
  auto p = StgcnBlockParams::create(2, 4, 3, 2, 0.0, rng);
  const Var y = stgcn_block(Var::constant(Tensor::normal({2, 2, 8, 17}, 1.0, rng)), p, A, Mode::train);
  EXPECT_EQ(y.shape(), (Shape{2, 4, 4, 17}));
  for (double v : y.value().vec()) EXPECT_GE(v, 0.0);
  EXPECT_THROW(StgcnBlockParams::create(2, 4, 4, 1, 0.0, rng), EvenKernel);
}

TEST(Skeleton, PartitionRowsSumToSubsetCount) {
  const auto topo = human17_topology();
  const auto A = partition_adjacency(topo);
  const std::size_t M = 17;
  for (std::size_t j = 0; j < M; ++j) {
    double total = 0.0;
    std::size_t nonempty = 0;
    for (std::size_t l = 0; l < 3; ++l) {
      double row = 0.0;
      for (std::size_t i = 0; i < M; ++i) row += A.matrix(l)[j * M + i];
      if (row > 0.0) {
        ++nonempty;
        EXPECT_NEAR(row, 1.0, 1e-15);
      }
      total += row;
    }
    EXPECT_DOUBLE_EQ(total, static_cast<double>(nonempty));
    EXPECT_GT(A.matrix(0)[j * M + j], 0.0);
  }
  // Root: itself in subset 0, its three children in subset 1.
  EXPECT_DOUBLE_EQ(A.matrix(0)[0], 1.0);
  EXPECT_DOUBLE_EQ(A.matrix(1)[0 * M + 1], 1.0 / 3.0);
  // Knee (2): hip side is closer to the root, ankle farther.
  EXPECT_DOUBLE_EQ(A.matrix(2)[2 * M + 1], 1.0);
  EXPECT_DOUBLE_EQ(A.matrix(1)[2 * M + 3], 1.0);
}

TEST(Skeleton, InvariantsAreEnforced) {
  EXPECT_THROW(build_topology(3, {{0, 1}}, 0, identity_mirror(3)), DisconnectedGraph);
  EXPECT_THROW(build_topology(3, {{0, 1}, {1, 5}}, 0, identity_mirror(3)), IndexOutOfRange);
  EXPECT_THROW(build_topology(3, {{0, 1}, {1, 2}}, 0, {1, 0, 2}), InvalidMirror);  // root not fixed
  EXPECT_THROW(build_topology(3, {{0, 1}, {1, 2}}, 0, {0, 2, 0}), InvalidMirror);  // not an involution
  const auto h = human17_topology();
  for (std::size_t j = 0; j < 17; ++j) EXPECT_EQ(h.mirror_map()[h.mirror_map()[j]], j);
}

TEST(Skeleton, RelabelingPermutesTheConvolution) {
  // Renaming joints must permute the output of the graph conv accordingly.
  std::mt19937_64 rng(4);
  const auto topo = human17_topology();
  std::vector<std::size_t> perm(17);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto other = relabel(topo, perm);
  Tensor x = Tensor::normal({1, 2, 3, 17}, 1.0, rng), xp({1, 2, 3, 17});
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t j = 0; j < 17; ++j) xp[(c * 3 + t) * 17 + perm[j]] = x[(c * 3 + t) * 17 + j];
  std::array<Var, 3> W;
  for (auto& w : W) w = Var::constant(Tensor::normal({2, 2}, 1.0, rng));
  const Tensor a = spatial_graph_conv(Var::constant(x), partition_adjacency(topo), W).value();
  const Tensor b = spatial_graph_conv(Var::constant(xp), partition_adjacency(other), W).value();
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t j = 0; j < 17; ++j) EXPECT_NEAR(a[(c * 3 + t) * 17 + j], b[(c * 3 + t) * 17 + perm[j]], 1e-12);
}
