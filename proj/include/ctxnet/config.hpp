#pragma once

#include "ctxnet/losses.hpp"
#include "ctxnet/metrics.hpp"
#include "ctxnet/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace ctxnet {

/// Every training/inference hyperparameter. Defaults follow the reference
/// recipe: SGD, lr 0.002, momentum 0.5, decay 0.01, mini-batches of 2.
struct RunConfig {
  double lr = 0.002;
  double momentum = 0.5;
  double weight_decay = 0.01;
  /// Per-epoch multiplier on lr; 1 keeps it constant. Alternative reading of
  /// the decay rate as a learning-rate schedule.
  double lr_epoch_multiplier = 1.0;
  int batch_size = 2;
  /// Optimizer settings for phase 0 only, which stands in for pretraining.
  double pretrain_lr = 0.002;
  double pretrain_momentum = 0.5;
  int epochs_phase0 = 5;
  int epochs_phase1 = 15;
  int epochs_phase2 = 10;
  double converge_min_delta = 0.002;
  int converge_patience = 3;
  std::uint64_t seed = 42;

  LossConfig loss;
  TargetConfig targets;
  ModelConfig model;
  Binarization binarization;

  void validate() const;
};

/// Flat JSON object; every field is a key (model fields included).
nlohmann::ordered_json to_json(const RunConfig& c);
/// Starts from defaults and overrides the keys present. Unknown keys throw.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

}  // namespace ctxnet
