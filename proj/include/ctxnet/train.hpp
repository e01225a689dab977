#pragma once

#include "ctxnet/config.hpp"
#include "ctxnet/data.hpp"
#include "ctxnet/metrics.hpp"
#include "ctxnet/model.hpp"

#include <json.hpp>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctxnet {

struct EpochLog {
  int epoch = 0;  // global, 1-based
  int phase = 0;
  LossBreakdown loss;  // means over the epoch's samples
  double val_map = 0;
};

nlohmann::ordered_json to_json(const EpochLog& e);

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  double best_val_map = 0;
  int best_epoch = 0;
  std::vector<EpochLog> log;
  /// Concatenated backbone values at the end of phases 0, 1 and 2.
  std::vector<VectorXd> backbone_after_phase;
};

struct TrainOptions {
  std::string checkpoint_path;  // best-val checkpoint; empty to skip writing
  std::function<void(const EpochLog&)> on_epoch;
};

/// Three phases: (0) backbone pretraining through a temporary global-pool
/// label head, (1) heads trained on the full objective with the backbone
/// frozen, (2) joint fine-tuning. A phase ends at its epoch cap or after
/// `converge_patience` epochs improving val mAP by less than
/// `converge_min_delta`. On return `model` holds the best-val parameters
/// (rounded through the checkpoint's float32 storage).
TrainResult train(Model& model, const RunConfig& config, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainOptions& options = {});

/// Predictions for every sample, reporting the selected branch's confidences.
std::vector<PredictionRecord> predict_records(const Model& model, const LossConfig& loss,
                                              const std::vector<Sample>& samples, BranchSelect branch);

VectorXd backbone_values(const Model& model);

std::string checkpoint_config(const RunConfig& config);
/// Rebuilds a model from a checkpoint file; the run config embedded in the
/// checkpoint is returned through `config` when non-null.
Model load_model(const std::string& checkpoint_path, RunConfig* config = nullptr);

}  // namespace ctxnet
