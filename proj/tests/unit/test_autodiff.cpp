#include <gtest/gtest.h>

#include <random>

#include "ugcn/autodiff.hpp"
#include "ugcn/error.hpp"
#include "ugcn/gradcheck.hpp"

using namespace ugcn;

TEST(Tensor, ShapeAndDataMustAgree) {
  EXPECT_THROW(Tensor(Shape{2, 3}, std::vector<double>(5)), ShapeMismatch);
  Tensor t(Shape{2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_THROW(t.item(), ShapeMismatch);
  EXPECT_DOUBLE_EQ(Tensor::scalar(4.0).item(), 4.0);
}

TEST(Autodiff, ChainRuleOnSmallExpression) {
  // f(a, b) = sum((a * b + a)^2 restricted by relu); analytic grads by hand.
  Var a = Var::parameter(Tensor(Shape{3}, std::vector<double>{1.0, -2.0, 0.5}));
  Var b = Var::parameter(Tensor(Shape{3}, std::vector<double>{3.0, 1.0, -4.0}));
  Var y = add(mul(a, b), a);  // a(b + 1): {4, -4, -1.5}
  Var r = relu(y);            // {4, 0, 0}
  Var f = sum(mul(r, r));     // 16
  backprop(f);
  EXPECT_DOUBLE_EQ(f.value().item(), 16.0);
  // df/da = 2 r (b + 1) on the active entry only.
  EXPECT_DOUBLE_EQ(a.grad()[0], 2 * 4.0 * 4.0);
  EXPECT_DOUBLE_EQ(a.grad()[1], 0.0);
  EXPECT_DOUBLE_EQ(a.grad()[2], 0.0);
  EXPECT_DOUBLE_EQ(b.grad()[0], 2 * 4.0 * 1.0);
}

TEST(Autodiff, SharedSubexpressionAccumulates) {
  Var x = Var::parameter(Tensor(Shape{1}, 3.0));
  Var y = mul(x, x);
  Var f = sum(add(y, y));  // 2 x^2 -> 4x
  backprop(f);
  EXPECT_DOUBLE_EQ(x.grad()[0], 12.0);
}

TEST(Autodiff, BackpropNeedsScalar) {
  Var x = Var::parameter(Tensor(Shape{2}, 1.0));
  EXPECT_THROW(backprop(scale(x, 2.0)), NonScalarOutput);
}

TEST(Autodiff, BinaryShapesMustMatchOrBroadcast) {
  Var a = Var::constant(Tensor(Shape{2, 3}, 1.0));
  EXPECT_THROW(add(a, Var::constant(Tensor(Shape{2}, 1.0))), ShapeMismatch);
  Var row = Var::constant(Tensor(Shape{3}, std::vector<double>{1, 2, 3}));
  Var s = add(a, row);
  EXPECT_DOUBLE_EQ(s.value()[5], 4.0);
}

TEST(Autodiff, MatmulMatchesLoops) {
  std::mt19937_64 rng(3);
  Tensor A = Tensor::normal({4, 5}, 1.0, rng), B = Tensor::normal({5, 2}, 1.0, rng);
  Var C = matmul(Var::constant(A), Var::constant(B));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 5; ++k) s += A[i * 5 + k] * B[k * 2 + j];
      EXPECT_NEAR(C.value()[i * 2 + j], s, 1e-12);
    }
  EXPECT_THROW(matmul(Var::constant(A), Var::constant(A)), ShapeMismatch);
}

TEST(Autodiff, ReduceAxesAndInvalidAxis) {
  Var x = Var::constant(Tensor(Shape{2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6}));
  Var r = reduce(ReduceKind::sum, x, {1});
  ASSERT_EQ(r.shape(), (Shape{2}));
  EXPECT_DOUBLE_EQ(r.value()[0], 6.0);
  EXPECT_DOUBLE_EQ(r.value()[1], 15.0);
  EXPECT_DOUBLE_EQ(mean(x).value().item(), 3.5);
  EXPECT_THROW(reduce(ReduceKind::sum, x, {2}), InvalidAxis);
}

TEST(Autodiff, NoGradGuardSkipsTape) {
  Var x = Var::parameter(Tensor(Shape{2}, 1.0));
  {
    NoGradGuard guard;
    Var y = scale(x, 3.0);
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(grad_enabled());
}

TEST(Autodiff, ConvTimeRejectsEvenKernel) {
  Var x = Var::constant(Tensor(Shape{1, 2, 8, 3}));
  Var w = Var::constant(Tensor(Shape{2, 2, 4}));
  EXPECT_THROW(conv_time(x, w, 1), EvenKernel);
}

TEST(GradCheck, DetectsWrongDerivative) {
  // sum(x^2) with a backward rule that drops the factor 2.
  auto bad = [](const Var& x) {
    Tensor v = x.value();
    double s = 0.0;
    for (double e : v.vec()) s += e * e;
    return make_op(Tensor::scalar(s), {x}, [](Node& self) {
      Node& p = *self.parents[0];
      for (std::size_t i = 0; i < p.value.size(); ++i) p.grad[i] += self.grad[0] * p.value[i];  // should be 2x
    });
  };
  std::mt19937_64 rng(1);
  const auto r = grad_check(bad, Tensor::normal({5}, 1.0, rng));
  EXPECT_FALSE(r.passed);
  const auto ok = grad_check([](const Var& x) { return sum(mul(x, x)); }, Tensor::normal({5}, 1.0, rng));
  EXPECT_TRUE(ok.passed) << ok.max_rel_error;
}

TEST(GradCheck, ZeroGradientEntriesAreJudgedAbsolutely) {
  // (x + c)^2 - x^2 - 2cx has zero gradient, but its central difference is
  // roundoff noise of order eps * c^2 / step.
  auto f = [](const Var& x) {
    Var c = Var::constant(Tensor(x.shape(), 1e3));
    Var xc = add(x, c);
    return sum(sub(sub(mul(xc, xc), mul(x, x)), scale(mul(c, x), 2.0)));
  };
  Tensor x(Shape{1}, 0.3);
  const auto r = grad_check(f, x);
  EXPECT_TRUE(r.passed) << r.max_rel_error;
  GradCheckOptions fixed_floor;
  fixed_floor.roundoff_factor = 0.0;
  fixed_floor.refinements = 0;
  EXPECT_FALSE(grad_check(f, x, fixed_floor).passed);
}

TEST(GradCheck, StepRefinementRecoversNearKink) {
  // An entry 3e-6 from the |x| kink: the default step straddles it, a
  // smaller one does not.
  Tensor x(Shape{2}, std::vector<double>{3e-6, 1.0});
  const auto r = grad_check([](const Var& v) { return sum(abs(v)); }, x);
  EXPECT_TRUE(r.passed) << r.max_rel_error;
  EXPECT_EQ(r.refined, 1u);
}
