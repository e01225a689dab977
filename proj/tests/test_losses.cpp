#include "ctxnet/losses.hpp"
#include "ctxnet/ops.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace ctxnet;

TEST(SmoothL1, Branches) {
  EXPECT_DOUBLE_EQ(smooth_l1(0.0), 0.0);
  EXPECT_DOUBLE_EQ(smooth_l1(0.5), 0.125);
  EXPECT_DOUBLE_EQ(smooth_l1(-0.5), 0.125);
  EXPECT_DOUBLE_EQ(smooth_l1(1.0), 0.5);
  EXPECT_DOUBLE_EQ(smooth_l1(3.0), 2.5);
}

TEST(SmoothL1, ContinuousAtKink) { EXPECT_NEAR(smooth_l1(1.0 - 1e-12), smooth_l1(1.0 + 1e-12), 1e-11); }

TEST(LocationLoss, Examples) {
  EXPECT_EQ(location_loss(BoxDelta{1, 2, 3, 4}, BoxDelta{1, 2, 3, 4}), 0.0);
  EXPECT_NEAR(location_loss(BoxDelta{0.5, 0, 0, 0}, BoxDelta{}), 0.125, 1e-12);
  EXPECT_NEAR(location_loss(BoxDelta{2, 2, 2, 2}, BoxDelta{}), 6.0, 1e-12);
}

TEST(PatchLoss, Examples) {
  EXPECT_NEAR(patch_loss(0.5, 1), std::log(2.0), 1e-12);
  EXPECT_NEAR(patch_loss(0.9, 0), -std::log(0.1), 1e-12);
  EXPECT_LT(patch_loss(1.0 - 1e-12, 1), 1e-6);
}

TEST(PatchLoss, ExtremesStayFinite) {
  EXPECT_TRUE(std::isfinite(patch_loss(0.0, 1)));
  EXPECT_TRUE(std::isfinite(patch_loss(1.0, 0)));
  EXPECT_NEAR(patch_loss(0.0, 1), -std::log(kProbEpsilon), 1e-9);
}

TEST(LabelLoss, SquashAtZero) {
  const std::vector<double> scores{0, 0};
  const std::vector<int> labels{1, 0};
  EXPECT_NEAR(label_loss(scores, labels, LossConfig{}), 2 * std::log(2.0), 1e-12);
}

TEST(LabelLoss, SquashLimit) {
  const std::vector<double> scores{60, -60, -60};
  const std::vector<int> labels{0, 1, 0};
  const std::vector<double> right{-60, 60, -60};
  EXPECT_LT(label_loss(right, labels, LossConfig{}), 3 * 1.01 * kProbEpsilon);
  EXPECT_GT(label_loss(scores, labels, LossConfig{}), 10);
}

TEST(LabelLoss, LiteralHalfOnPositive) {
  LossConfig cfg;
  cfg.sigma_mode = SigmaMode::kLiteral;
  const std::vector<double> scores{1.0};
  const std::vector<int> labels{1};
  EXPECT_NEAR(label_loss(scores, labels, cfg), std::log(2.0), 1e-12);
}

TEST(LabelLoss, LiteralRejectsOutOfRangeConfidence) {
  LossConfig cfg;
  cfg.sigma_mode = SigmaMode::kLiteral;
  const std::vector<int> labels{1};
  EXPECT_THROW(label_loss(std::vector<double>{1.5}, labels, cfg), std::invalid_argument);
  EXPECT_THROW(label_loss(std::vector<double>{-0.1}, labels, cfg), std::invalid_argument);
}

TEST(LabelLoss, LengthMismatchRejected) {
  EXPECT_THROW(label_loss(std::vector<double>{0.0}, std::vector<int>{1, 0}, LossConfig{}), std::invalid_argument);
}

TEST(TotalLoss, Weighting) {
  EXPECT_DOUBLE_EQ(total_loss(1, 2, 3, 4, LossConfig{}).total, 10.0);
  LossConfig cfg;
  cfg.alpha = 0.5;
  cfg.beta = 2;
  EXPECT_DOUBLE_EQ(total_loss(1, 1, 1, 1, cfg).total, 4.5);
  EXPECT_EQ(total_loss(0, 0, 0, 0, cfg).total, 0.0);
}

TEST(SigmaMode, StringRoundTrip) {
  for (SigmaMode m : {SigmaMode::kSquash, SigmaMode::kLiteral}) EXPECT_EQ(sigma_mode_from_string(to_string(m)), m);
  EXPECT_THROW(sigma_mode_from_string("other"), std::invalid_argument);
}

TEST(TensorLosses, AgreeWithScalarForms) {
  const Tensor q(Shape{3}, (VectorXd(3) << 0.2, 0.7, 0.95).finished());
  const Tensor y(Shape{3}, (VectorXd(3) << 1, 0, 1).finished());
  const double want = patch_loss(0.2, 1) + patch_loss(0.7, 0) + patch_loss(0.95, 1);
  EXPECT_NEAR(binary_cross_entropy(q, y).item(), want, 1e-12);

  const Tensor pred(Shape{2, 4}, (VectorXd(8) << 0.5, 0, 0, 0, 2, 2, 2, 2).finished());
  EXPECT_NEAR(location_loss(pred, Tensor(Shape{2, 4})).item(), (0.125 + 6.0) / 2, 1e-12);
}
