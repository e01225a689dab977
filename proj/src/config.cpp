#include "ctxnet/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace ctxnet {

void RunConfig::validate() const {
  auto fail = [](const std::string& why) { throw std::invalid_argument("config: " + why); };
  if (!(lr > 0)) fail("lr must be positive");
  if (!(momentum >= 0 && momentum < 1)) fail("momentum must lie in [0,1)");
  if (!(weight_decay >= 0)) fail("weight_decay must be non-negative");
  if (!(lr_epoch_multiplier > 0 && lr_epoch_multiplier <= 1)) fail("lr_epoch_multiplier must lie in (0,1]");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(pretrain_lr > 0)) fail("pretrain_lr must be positive");
  if (!(pretrain_momentum >= 0 && pretrain_momentum < 1)) fail("pretrain_momentum must lie in [0,1)");
  if (epochs_phase0 < 0 || epochs_phase1 < 0 || epochs_phase2 < 0) fail("epoch caps must be non-negative");
  if (converge_patience < 1) fail("converge_patience must be >= 1");
  if (loss.alpha < 0 || loss.beta < 0 || loss.gamma < 0) fail("alpha, beta, gamma must be non-negative");
  if (!(loss.sigma_factor > 0 && loss.sigma_factor <= 1)) fail("sigma must lie in (0,1]");
  if (!(targets.pos_iou > targets.neg_iou)) fail("pos_iou must exceed neg_iou");
  if (targets.anchor_samples < 2) fail("anchor_samples must be >= 2");
  model.validate();
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j{{"lr", c.lr},
                           {"momentum", c.momentum},
                           {"weight_decay", c.weight_decay},
                           {"lr_epoch_multiplier", c.lr_epoch_multiplier},
                           {"batch_size", c.batch_size},
                           {"pretrain_lr", c.pretrain_lr},
                           {"pretrain_momentum", c.pretrain_momentum},
                           {"epochs_phase0", c.epochs_phase0},
                           {"epochs_phase1", c.epochs_phase1},
                           {"epochs_phase2", c.epochs_phase2},
                           {"converge_min_delta", c.converge_min_delta},
                           {"converge_patience", c.converge_patience},
                           {"seed", c.seed},
                           {"alpha", c.loss.alpha},
                           {"beta", c.loss.beta},
                           {"gamma", c.loss.gamma},
                           {"sigma", c.loss.sigma_factor},
                           {"sigma_mode", to_string(c.loss.sigma_mode)},
                           {"pos_iou", c.targets.pos_iou},
                           {"neg_iou", c.targets.neg_iou},
                           {"anchor_samples", c.targets.anchor_samples},
                           {"train_with_gt_patches", c.targets.train_with_gt_patches},
                           {"binarization", c.binarization.kind == Binarization::Kind::kTopK ? "top_k" : "threshold"},
                           {"eval_top_k", c.binarization.k}};
  const auto model = to_json(c.model);
  for (auto& [k, v] : model.items()) j[k] = v;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  RunConfig c;
  nlohmann::json model = to_json(c.model);
  std::set<std::string> model_keys;
  for (auto& [k, v] : model.items()) model_keys.insert(k);

  for (auto& [key, v] : j.items()) {
    if (model_keys.count(key)) {
      model[key] = v;
      continue;
    }
    if (key == "lr") c.lr = v.get<double>();
    else if (key == "momentum") c.momentum = v.get<double>();
    else if (key == "weight_decay") c.weight_decay = v.get<double>();
    else if (key == "lr_epoch_multiplier") c.lr_epoch_multiplier = v.get<double>();
    else if (key == "batch_size") c.batch_size = v.get<int>();
    else if (key == "pretrain_lr") c.pretrain_lr = v.get<double>();
    else if (key == "pretrain_momentum") c.pretrain_momentum = v.get<double>();
    else if (key == "epochs_phase0") c.epochs_phase0 = v.get<int>();
    else if (key == "epochs_phase1") c.epochs_phase1 = v.get<int>();
    else if (key == "epochs_phase2") c.epochs_phase2 = v.get<int>();
    else if (key == "converge_min_delta") c.converge_min_delta = v.get<double>();
    else if (key == "converge_patience") c.converge_patience = v.get<int>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "alpha") c.loss.alpha = v.get<double>();
    else if (key == "beta") c.loss.beta = v.get<double>();
    else if (key == "gamma") c.loss.gamma = v.get<double>();
    else if (key == "sigma") c.loss.sigma_factor = v.get<double>();
    else if (key == "sigma_mode") c.loss.sigma_mode = sigma_mode_from_string(v.get<std::string>());
    else if (key == "pos_iou") c.targets.pos_iou = v.get<double>();
    else if (key == "neg_iou") c.targets.neg_iou = v.get<double>();
    else if (key == "anchor_samples") c.targets.anchor_samples = v.get<int>();
    else if (key == "train_with_gt_patches") c.targets.train_with_gt_patches = v.get<bool>();
    else if (key == "binarization") {
      const auto s = v.get<std::string>();
      if (s == "threshold") c.binarization.kind = Binarization::Kind::kThreshold;
      else if (s == "top_k") c.binarization.kind = Binarization::Kind::kTopK;
      else throw std::invalid_argument("config: binarization must be 'threshold' or 'top_k'");
    } else if (key == "eval_top_k") c.binarization.k = v.get<int>();
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  c.model = model_config_from_json(model);
  c.binarization.threshold = c.model.label_threshold;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read config '" + path + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config '" + path + "': " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace ctxnet
