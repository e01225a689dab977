#include "ctxnet/config.hpp"

#include <gtest/gtest.h>

using namespace ctxnet;

TEST(RunConfig, DefaultsMatchReferenceRecipe) {
  const RunConfig c;
  EXPECT_EQ(c.lr, 0.002);
  EXPECT_EQ(c.momentum, 0.5);
  EXPECT_EQ(c.weight_decay, 0.01);
  EXPECT_EQ(c.batch_size, 2);
  EXPECT_EQ(c.epochs_phase0 + c.epochs_phase1 + c.epochs_phase2, 30);
  EXPECT_EQ(c.targets.pos_iou, 0.5);
  EXPECT_EQ(c.targets.neg_iou, 0.3);
  EXPECT_EQ(c.model.nms_iou, 0.5);
  EXPECT_EQ(c.model.label_threshold, 0.5);
  EXPECT_EQ(c.model.expansion, 2.0);
  EXPECT_EQ(c.loss.alpha, 1.0);
  EXPECT_EQ(c.loss.sigma_factor, 0.5);
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c;
  c.lr = 0.01;
  c.model.fusion = FusionMode::kMean;
  c.model.top_k = 5;
  c.loss.sigma_mode = SigmaMode::kLiteral;
  const RunConfig back = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(RunConfig, EveryKeyOverridable) {
  const auto defaults = to_json(RunConfig{});
  for (const auto& [key, value] : defaults.items()) {
    nlohmann::json j = nlohmann::json::object();
    j[key] = value;
    EXPECT_NO_THROW(run_config_from_json(j)) << key;
  }
}

TEST(RunConfig, UnknownKeyRejected) {
  EXPECT_THROW(run_config_from_json({{"learning_rate", 0.1}}), std::invalid_argument);
}

TEST(RunConfig, InvalidValuesRejected) {
  EXPECT_THROW(run_config_from_json({{"lr", -1.0}}), std::invalid_argument);
  EXPECT_THROW(run_config_from_json({{"batch_size", 0}}), std::invalid_argument);
  EXPECT_THROW(run_config_from_json({{"expansion", 0.5}}), std::invalid_argument);
  EXPECT_THROW(run_config_from_json({{"fusion", "sum"}}), std::invalid_argument);
}

TEST(RunConfig, LargeImageSizeAccepted) {
  const RunConfig c = run_config_from_json({{"image_size", 416}});
  EXPECT_EQ(c.model.image_size, 416);
}
