#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "ugcn/loss.hpp"

using namespace ugcn;

namespace {

LossConfig config(MotionOperator op, std::vector<std::size_t> taus, MotionNorm norm = MotionNorm::l1) {
  LossConfig c;
  c.op = op;
  c.intervals = std::move(taus);
  c.norm = norm;
  return c;
}

}  // namespace

TEST(MotionLoss, MatchesBruteForceForEveryOperator) {
  std::mt19937_64 rng(21);
  const MotionOperator ops[] = {MotionOperator::subtraction, MotionOperator::inner_product, MotionOperator::cross_product};
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t T = 3 + rng() % 10, M = 1 + rng() % 4;
    const auto p = oracle::random_pose(T, M, 3, rng), g = oracle::random_pose(T, M, 3, rng);
    std::vector<std::size_t> taus;
    for (std::size_t tau = 1; tau < T; ++tau)
      if (rng() % 3 == 0) taus.push_back(tau);
    for (int op = 0; op < 3; ++op)
      for (bool l1 : {true, false}) {
        const auto cfg = config(ops[op], taus, l1 ? MotionNorm::l1 : MotionNorm::l2);
        EXPECT_NEAR(motion_loss(p, g, cfg), oracle::motion_loss(p, g, op, taus, l1), 1e-9);
      }
  }
}

TEST(MotionLoss, HandWorkedCrossProduct) {
  // One joint, two frames: s0 = e_x, s1 = e_y; gt s0 = e_x, s1 = e_x.
  PoseSequence p(2, 1, 3, std::vector<double>{1, 0, 0, 0, 1, 0});
  PoseSequence g(2, 1, 3, std::vector<double>{1, 0, 0, 1, 0, 0});
  // e_x x e_y = e_z, e_x x e_x = 0 -> l1 distance 1.
  EXPECT_DOUBLE_EQ(motion_loss(p, g, config(MotionOperator::cross_product, {1})), 1.0);
  // inner products: 0 vs 1.
  EXPECT_DOUBLE_EQ(motion_loss(p, g, config(MotionOperator::inner_product, {1})), 1.0);
  // subtraction: (1,-1,0) vs (0,0,0) -> 2.
  EXPECT_DOUBLE_EQ(motion_loss(p, g, config(MotionOperator::subtraction, {1})), 2.0);
}

TEST(MotionLoss, EmptyIntervalSetIsZero) {
  std::mt19937_64 rng(1);
  const auto p = oracle::random_pose(6, 2, 3, rng), g = oracle::random_pose(6, 2, 3, rng);
  EXPECT_EQ(motion_loss(p, g, config(MotionOperator::cross_product, {})), 0.0);
}

TEST(MotionLoss, InvariantToCommonTranslationOnlyForSubtraction) {
  std::mt19937_64 rng(8);
  auto p = oracle::random_pose(8, 3, 3, rng), g = oracle::random_pose(8, 3, 3, rng);
  const double base = motion_loss(p, g, config(MotionOperator::subtraction, {1, 3}));
  for (auto& v : p.coords) v += 5.0;
  for (auto& v : g.coords) v += 5.0;
  EXPECT_NEAR(motion_loss(p, g, config(MotionOperator::subtraction, {1, 3})), base, 1e-9);
}

TEST(MotionLoss, Errors) {
  std::mt19937_64 rng(1);
  const auto p = oracle::random_pose(5, 2, 3, rng), g = oracle::random_pose(5, 2, 3, rng);
  EXPECT_THROW(motion_loss(p, g, config(MotionOperator::cross_product, {5})), IntervalTooLarge);
  const auto p2 = oracle::random_pose(5, 2, 2, rng), g2 = oracle::random_pose(5, 2, 2, rng);
  EXPECT_THROW(motion_loss(p2, g2, config(MotionOperator::cross_product, {1})), DimensionError);
  EXPECT_NO_THROW(motion_loss(p2, g2, config(MotionOperator::inner_product, {1})));
  EXPECT_THROW(motion_loss(p, g2, config(MotionOperator::subtraction, {1})), ShapeMismatch);
}

TEST(PositionLoss, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t T = 1 + rng() % 8, M = 1 + rng() % 5;
    const auto p = oracle::random_pose(T, M, 3, rng), g = oracle::random_pose(T, M, 3, rng);
    EXPECT_NEAR(position_loss(p, g), oracle::position_loss(p, g), 1e-9);
  }
}

TEST(CombinedLoss, LambdaWeighsTheMotionTerm) {
  std::mt19937_64 rng(6);
  const auto p = oracle::random_pose(10, 3, 3, rng), g = oracle::random_pose(10, 3, 3, rng);
  auto cfg = config(MotionOperator::cross_product, {2, 4});
  const Var vp = Var::constant(p.tensor()), vg = Var::constant(g.tensor());
  cfg.lambda = 0.0;
  EXPECT_DOUBLE_EQ(combined_loss(vp, vg, cfg).value().item(), oracle::position_loss(p, g));
  cfg.lambda = 2.5;
  EXPECT_NEAR(combined_loss(vp, vg, cfg).value().item(),
              oracle::position_loss(p, g) + 2.5 * oracle::motion_loss(p, g, 2, {2, 4}), 1e-9);
  cfg.lambda = -1.0;
  EXPECT_THROW(combined_loss(vp, vg, cfg), InvalidConfig);
}

TEST(DerivativeLoss, IsSubtractionWithUnitInterval) {
  std::mt19937_64 rng(7);
  const auto p = oracle::random_pose(9, 4, 3, rng), g = oracle::random_pose(9, 4, 3, rng);
  EXPECT_NEAR(derivative_loss(Var::constant(p.tensor()), Var::constant(g.tensor())).value().item(),
              oracle::motion_loss(p, g, 0, {1}), 1e-12);
}

TEST(EncodeMotion, BatchedShapes) {
  Tensor s({2, 6, 4, 3}, 1.0);
  EXPECT_EQ(encode_motion(Var::constant(s), 2, MotionOperator::cross_product).shape(), (Shape{2, 4, 4, 3}));
  EXPECT_EQ(encode_motion(Var::constant(s), 5, MotionOperator::inner_product).shape(), (Shape{2, 1, 4, 1}));
  EXPECT_THROW(encode_motion(Var::constant(s), 0, MotionOperator::subtraction), InvalidConfig);
}
