#include "ctxnet/ops.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace ctxnet;

namespace {

Tensor random_tensor(Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  VectorXd v(numel(s));
  for (Index i = 0; i < v.size(); ++i) v[i] = u(rng);
  return Tensor(s, v);
}

// Direct nested-loop convolution.
Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int O = w.dim(0), K = w.dim(2);
  const int Ho = (H + 2 * pad - K) / stride + 1, Wo = (W + 2 * pad - K) / stride + 1;
  Tensor y(Shape{O, Ho, Wo});
  for (int o = 0; o < O; ++o)
    for (int i = 0; i < Ho; ++i)
      for (int j = 0; j < Wo; ++j) {
        double acc = b[o];
        for (int c = 0; c < C; ++c)
          for (int ki = 0; ki < K; ++ki)
            for (int kj = 0; kj < K; ++kj) {
              const int yi = i * stride - pad + ki, xj = j * stride - pad + kj;
              if (yi < 0 || xj < 0 || yi >= H || xj >= W) continue;
              acc += x[(c * H + yi) * W + xj] * w[((o * C + c) * K + ki) * K + kj];
            }
        y.value()[(o * Ho + i) * Wo + j] = acc;
      }
  return y;
}

}  // namespace

TEST(Relu, Definition) {
  const Tensor y = relu(Tensor(Shape{3}, (VectorXd(3) << -1, 0, 2).finished()));
  EXPECT_EQ(y.value(), (VectorXd(3) << 0, 0, 2).finished());
}

TEST(Logistic, HalfAtZero) { EXPECT_DOUBLE_EQ(logistic(Tensor::scalar(0)).item(), 0.5); }

TEST(Logistic, StableAtExtremes) {
  const Tensor y = logistic(Tensor(Shape{2}, (VectorXd(2) << -800, 800).finished()));
  EXPECT_EQ(y[0], 0.0);
  EXPECT_EQ(y[1], 1.0);
}

TEST(Conv2d, SingleWindowIsDotProduct) {
  const Tensor x = random_tensor({1, 3, 3}, 1);
  const Tensor w = random_tensor({1, 1, 3, 3}, 2);
  const Tensor y = conv2d(x, w, Tensor(Shape{1}), 1, 0);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_NEAR(y.item(), x.value().dot(w.value()), 1e-12);
}

class Conv2dOracle : public ::testing::TestWithParam<std::tuple<int, int, int>> {};

TEST_P(Conv2dOracle, MatchesNestedLoops) {
  const auto [k, stride, pad] = GetParam();
  const Tensor x = random_tensor({3, 9, 7}, 10 + k);
  const Tensor w = random_tensor({4, 3, k, k}, 20 + stride);
  const Tensor b = random_tensor({4}, 30 + pad);
  const Tensor got = conv2d(x, w, b, stride, pad);
  const Tensor want = naive_conv(x, w, b, stride, pad);
  ASSERT_EQ(got.shape(), want.shape());
  EXPECT_LT((got.value() - want.value()).cwiseAbs().maxCoeff(), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Shapes, Conv2dOracle,
                         ::testing::Values(std::make_tuple(3, 1, 1), std::make_tuple(3, 2, 1),
                                           std::make_tuple(1, 1, 0), std::make_tuple(3, 1, 0)));

TEST(Conv2d, ChannelMismatchNamesShapes) {
  try {
    conv2d(Tensor(Shape{2, 4, 4}), Tensor(Shape{1, 3, 3, 3}), Tensor(Shape{1}), 1, 1);
    FAIL();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("conv2d"), std::string::npos);
    EXPECT_NE(msg.find("[2,4,4]"), std::string::npos) << msg;
  }
}

TEST(Add, ShapeMismatchRejected) {
  EXPECT_THROW(add(Tensor(Shape{2}), Tensor(Shape{3})), std::invalid_argument);
}

TEST(Maxpool2d, PicksWindowMax) {
  const Tensor x(Shape{1, 2, 4}, (VectorXd(8) << 1, 5, 2, 0, 3, 4, 7, 6).finished());
  const Tensor y = maxpool2d(x, 2, 2);
  EXPECT_EQ(y.value(), (VectorXd(2) << 5, 7).finished());
}

TEST(UpsampleNearest, RepeatsPixels) {
  const Tensor x(Shape{1, 1, 2}, (VectorXd(2) << 1, 2).finished());
  const Tensor y = upsample_nearest(x, 2);
  EXPECT_EQ(y.shape(), (Shape{1, 2, 4}));
  EXPECT_EQ(y.value(), (VectorXd(8) << 1, 1, 2, 2, 1, 1, 2, 2).finished());
}

TEST(RegionAvgPool, WholeMapGridOneIsGlobalMean) {
  const Tensor x = random_tensor({2, 4, 5}, 3);
  const Tensor y = region_avg_pool(x, Region{0, 0, 5, 4}, 1);
  EXPECT_NEAR(y[0], x.value().head(20).mean(), 1e-12);
  EXPECT_NEAR(y[1], x.value().tail(20).mean(), 1e-12);
}

TEST(RegionAvgPool, ConstantMapGivesConstant) {
  Tensor x(Shape{1, 6, 6});
  x.value().setConstant(0.7);
  const Tensor y = region_avg_pool(x, Region{0.3, 1.1, 5.2, 4.9}, 3);
  for (Index i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], 0.7, 1e-12);
}

TEST(RegionAvgPool, HandComputedCornerBins) {
  VectorXd v(16);
  for (int i = 0; i < 16; ++i) v[i] = i;
  const Tensor x(Shape{1, 4, 4}, v);
  // 2x2 region at the top-left corner, grid 2: each bin is one cell.
  EXPECT_EQ(region_avg_pool(x, Region{0, 0, 2, 2}, 2).value(), (VectorXd(4) << 0, 1, 4, 5).finished());
  // 4x4 region, grid 2: bins average 2x2 blocks.
  EXPECT_EQ(region_avg_pool(x, Region{0, 0, 4, 4}, 2).value(), (VectorXd(4) << 2.5, 4.5, 10.5, 12.5).finished());
}

TEST(Dense, BatchMatchesRowwise) {
  const Tensor x = random_tensor({3, 4}, 5), w = random_tensor({2, 4}, 6), b = random_tensor({2}, 7);
  const Tensor y = dense(x, w, b);
  ASSERT_EQ(y.shape(), (Shape{3, 2}));
  for (int r = 0; r < 3; ++r) {
    const Tensor row = dense(Tensor(Shape{4}, x.value().segment(r * 4, 4)), w, b);
    EXPECT_NEAR(y[r * 2], row[0], 1e-12);
    EXPECT_NEAR(y[r * 2 + 1], row[1], 1e-12);
  }
}

TEST(Log, RejectsNonPositive) { EXPECT_THROW(log(Tensor::scalar(0.0)), std::invalid_argument); }

TEST(Clamp, LimitsValues) {
  const Tensor y = clamp(Tensor(Shape{3}, (VectorXd(3) << -2, 0.5, 3).finished()), 0, 1);
  EXPECT_EQ(y.value(), (VectorXd(3) << 0, 0.5, 1).finished());
}

TEST(Clamp, PropagatesNaN) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_TRUE(std::isnan(clamp(Tensor(Shape{1}, (VectorXd(1) << nan).finished()), 0, 1).value()[0]));
}

TEST(MaxRows, PropagatesNaNFromAnyRow) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const VectorXd y = max_rows(Tensor(Shape{3, 2}, (VectorXd(6) << 1, nan, nan, 0, 2, 5).finished())).value();
  EXPECT_TRUE(std::isnan(y[0]));
  EXPECT_TRUE(std::isnan(y[1]));
}

TEST(MaxRows, TiesGoToLowerRow) {
  Tensor x(Shape{2, 2}, (VectorXd(4) << 1, 3, 1, 2).finished());
  x.set_requires_grad(true);
  backward(sum(max_rows(x)));
  EXPECT_EQ(x.grad(), (VectorXd(4) << 1, 1, 0, 0).finished());
}

TEST(Reductions, SumAndMean) {
  const Tensor x(Shape{4}, (VectorXd(4) << 1, 2, 3, 4).finished());
  EXPECT_DOUBLE_EQ(sum(x).item(), 10);
  EXPECT_DOUBLE_EQ(mean(x).item(), 2.5);
}

TEST(Gather, RepeatedIndicesAccumulate) {
  Tensor x(Shape{3}, (VectorXd(3) << 1, 2, 3).finished());
  x.set_requires_grad(true);
  backward(sum(gather(x, {2, 2, 0})));
  EXPECT_EQ(x.grad(), (VectorXd(3) << 1, 0, 2).finished());
}
