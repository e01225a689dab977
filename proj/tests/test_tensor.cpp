#include "ctxnet/gradcheck.hpp"
#include "ctxnet/ops.hpp"
#include "ctxnet/tensor.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ctxnet;

namespace {

Tensor vec(std::initializer_list<double> v) {
  VectorXd x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double d : v) x[i++] = d;
  return Tensor(Shape{static_cast<int>(v.size())}, x);
}

}  // namespace

TEST(Tensor, ScalarItem) { EXPECT_DOUBLE_EQ(Tensor::scalar(2.5).item(), 2.5); }

TEST(Tensor, ShapeAndSize) {
  Tensor t(Shape{2, 3, 4});
  EXPECT_EQ(t.rank(), 3);
  EXPECT_EQ(t.dim(1), 3);
  EXPECT_EQ(t.size(), 24);
  EXPECT_EQ(t.value().sum(), 0.0);
}

TEST(Tensor, RejectsValueShapeMismatch) {
  EXPECT_THROW(Tensor(Shape{2, 2}, VectorXd::Zero(3)), std::invalid_argument);
}

TEST(Tensor, ItemRequiresSingleElement) { EXPECT_THROW(vec({1, 2}).item(), std::invalid_argument); }

TEST(Backward, SumOfSquares) {
  Tensor x = vec({1, 2});
  x.set_requires_grad(true);
  backward(sum(mul(x, x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], 4.0);
}

TEST(Backward, ConstantLossGivesZeroGrad) {
  Tensor x = vec({1, 2, 3});
  x.set_requires_grad(true);
  Tensor loss = add(mul_scalar(sum(x), 0.0), Tensor::scalar(5.0));
  backward(loss);
  EXPECT_EQ(x.grad(), VectorXd::Zero(3));
}

TEST(Backward, RejectsNonScalarLoss) {
  Tensor x = vec({1, 2});
  x.set_requires_grad(true);
  EXPECT_THROW(backward(mul_scalar(x, 2.0)), std::invalid_argument);
}

TEST(Backward, SharedSubgraphAccumulatesOnce) {
  Tensor x = vec({3});
  x.set_requires_grad(true);
  Tensor y = mul_scalar(x, 2.0);
  backward(sum(add(y, y)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0);
}

TEST(Backward, RepeatedCallsDoNotAccumulate) {
  Tensor x = vec({1});
  x.set_requires_grad(true);
  Tensor loss = sum(mul_scalar(x, 3.0));
  backward(loss);
  backward(loss);
  EXPECT_DOUBLE_EQ(x.grad()[0], 3.0);
}

TEST(NoGrad, SuppressesGraphRecording) {
  Tensor x = vec({1, 2});
  x.set_requires_grad(true);
  Tensor y;
  {
    NoGradGuard guard;
    EXPECT_FALSE(grad_enabled());
    y = mul_scalar(x, 2.0);
  }
  EXPECT_TRUE(grad_enabled());
  EXPECT_FALSE(y.requires_grad());
}

TEST(Detach, CutsTheGraph) {
  Tensor x = vec({2});
  x.set_requires_grad(true);
  Tensor d = x.detach();
  EXPECT_FALSE(d.requires_grad());
  d.value()[0] = 7;
  EXPECT_EQ(x.value()[0], 2);
}

TEST(GradCheck, IdentityIsExact) {
  const auto r = grad_check([](const std::vector<Tensor>& in) { return sum(in[0]); }, {vec({0.3, -1.2, 4.0})});
  EXPECT_LT(r.max_rel_error, 1e-9);
  EXPECT_EQ(r.checked, 3);
}

TEST(GradCheck, DenseLayerSeedOne) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  auto rand = [&](Shape s) {
    VectorXd v(numel(s));
    for (Index i = 0; i < v.size(); ++i) v[i] = u(rng);
    return Tensor(s, v);
  };
  const auto r = grad_check(
      [](const std::vector<Tensor>& in) { return random_projection(dense(in[0], in[1], in[2]), 1); },
      {rand({4}), rand({3, 4}), rand({3})});
  EXPECT_LE(r.max_rel_error, 1e-4);
}

TEST(GradCheck, SmoothL1AwayFromKink) {
  GradCheckOptions opts;
  opts.exclude = [](const std::vector<Tensor>& in, std::size_t k, Index c) {
    return std::abs(std::abs(in[k].value()[c]) - 1.0) < 1e-3;
  };
  const auto r = grad_check([](const std::vector<Tensor>& in) { return sum(smooth_l1(in[0])); },
                            {vec({-2.0, -1.0, -0.4, 0.2, 1.0, 1.7})}, opts);
  EXPECT_EQ(r.checked, 4);
  EXPECT_LE(r.max_rel_error, 1e-4);
}
