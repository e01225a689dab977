#include "ctxnet/train.hpp"

#include "ctxnet/checkpoint.hpp"
#include "ctxnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctxnet {

nlohmann::ordered_json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch},
          {"phase", e.phase},
          {"l_r", e.loss.l_r},
          {"l_p", e.loss.l_p},
          {"l_l_object", e.loss.l_l_object},
          {"l_l_context", e.loss.l_l_context},
          {"total", e.loss.total},
          {"val_mAP", e.val_map}};
}

VectorXd backbone_values(const Model& model) {
  std::vector<double> all;
  for (const auto& [name, t] : model.params().entries()) {
    if (name.rfind(Model::kBackbonePrefix, 0) != 0) continue;
    all.insert(all.end(), t.value().data(), t.value().data() + t.size());
  }
  return Eigen::Map<VectorXd>(all.data(), static_cast<Index>(all.size()));
}

std::string checkpoint_config(const RunConfig& config) { return to_json(config).dump(); }

Model load_model(const std::string& checkpoint_path, RunConfig* config) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  RunConfig rc;
  try {
    rc = run_config_from_json(nlohmann::json::parse(ckpt.config));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint '" + checkpoint_path + "' has an unreadable config: " + e.what());
  }
  Model model(rc.model, rc.seed);
  load_into(model.params(), ckpt);
  if (config) *config = rc;
  return model;
}

std::vector<PredictionRecord> predict_records(const Model& model, const LossConfig& loss,
                                              const std::vector<Sample>& samples, BranchSelect branch) {
  std::vector<PredictionRecord> records;
  records.reserve(samples.size());
  for (const Sample& s : samples) {
    const ImagePrediction p = model.predict(s.image, loss);
    const VectorXd& v = branch == BranchSelect::kObject ? p.object : branch == BranchSelect::kContext ? p.context : p.fused;
    records.push_back({s.id, std::vector<double>(v.data(), v.data() + v.size()), s.labels});
  }
  return records;
}

namespace {

// Temporary global-pool classifier used only while pretraining the backbone.
struct PretrainHead {
  ParamStore params;

  PretrainHead(int channels, int categories, std::mt19937_64& rng) {
    params.add("pretrain.fc.w", init_uniform_fan_in(Shape{categories, channels}, channels, rng));
    params.add("pretrain.fc.b", Tensor(Shape{categories}, true));
  }

  Tensor probabilities(const Model& model, const Tensor& image) const {
    const Tensor top = model.extract_features(image).top_stage;
    const Tensor pooled = region_avg_pool(top, Region{0, 0, static_cast<double>(top.dim(2)), static_cast<double>(top.dim(1))}, 1);
    return logistic(dense(pooled, params.at("pretrain.fc.w"), params.at("pretrain.fc.b")));
  }
};

Tensor label_tensor(const Sample& s) {
  VectorXd y(static_cast<Index>(s.labels.size()));
  for (std::size_t c = 0; c < s.labels.size(); ++c) y[static_cast<Index>(c)] = s.labels[c];
  return Tensor(Shape{static_cast<int>(y.size())}, y);
}

double pretrain_val_map(const Model& model, const PretrainHead& head, const std::vector<Sample>& val) {
  NoGradGuard no_grad;
  std::vector<PredictionRecord> records;
  for (const Sample& s : val) {
    const Tensor q = head.probabilities(model, s.image);
    records.push_back({s.id, std::vector<double>(q.value().data(), q.value().data() + q.size()), s.labels});
  }
  return mean_average_precision(records).value;
}

void step_all(ParamStore& a, ParamStore* b, OptimState& sa, OptimState* sb) {
  sgd_step(a, sa);
  if (b) sgd_step(*b, *sb);
}

void require_finite(double v, int epoch) {
  if (!std::isfinite(v)) {
    throw TrainingAborted("non-finite loss in epoch " + std::to_string(epoch) + "; last good checkpoint retained");
  }
}

}  // namespace

TrainResult train(Model& model, const RunConfig& config, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainOptions& options) {
  config.validate();
  if (train_set.empty() || val_set.empty()) throw std::invalid_argument("train: empty train or val set");
  TrainResult result;
  std::mt19937_64 head_rng(config.seed ^ 0x5EEDULL);
  PretrainHead head(config.model.stage_channels.back(), config.model.num_categories, head_rng);
  ParamStore& params = model.params();
  ParamStore best = params.snapshot();
  bool have_best = false;
  const std::string blob = checkpoint_config(config);
  int global_epoch = 0;
  double lr = config.lr;

  const int caps[3] = {config.epochs_phase0, config.epochs_phase1, config.epochs_phase2};
  for (int phase = 0; phase < 3; ++phase) {
    params.unfreeze_all();
    if (phase == 0) {
      for (const auto& [name, t] : params.entries())
        if (name.rfind(Model::kBackbonePrefix, 0) != 0) params.freeze(name);
    } else if (phase == 1) {
      params.freeze_prefix(Model::kBackbonePrefix);
    }
    OptimState state = phase == 0 ? OptimState{config.pretrain_lr, config.pretrain_momentum, config.weight_decay, {}}
                                  : OptimState{lr, config.momentum, config.weight_decay, {}};
    OptimState head_state = state;

    double phase_best = -1.0;
    int stalled = 0;
    for (int e = 0; e < caps[phase]; ++e) {
      ++global_epoch;
      std::mt19937_64 rng(config.seed * 1000003ULL + static_cast<std::uint64_t>(global_epoch));
      std::vector<std::size_t> order(train_set.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);

      LossBreakdown sums;
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
        const double inv = 1.0 / static_cast<double>(end - start);
        std::vector<Tensor> totals;
        for (std::size_t i = start; i < end; ++i) {
          const Sample& s = train_set[order[i]];
          if (phase == 0) {
            const Tensor l = mul_scalar(binary_cross_entropy(head.probabilities(model, s.image), label_tensor(s)),
                                        config.loss.beta);
            sums.l_l_object += l.item() / config.loss.beta;
            sums.total += l.item();
            totals.push_back(l);
          } else {
            const LossTerms terms = model.training_loss(s, config.loss, config.targets, rng);
            const LossBreakdown v = terms.values();
            sums.l_r += v.l_r;
            sums.l_p += v.l_p;
            sums.l_l_object += v.l_l_object;
            sums.l_l_context += v.l_l_context;
            sums.total += v.total;
            totals.push_back(terms.total);
          }
          require_finite(totals.back().item(), global_epoch);
        }
        Tensor batch_loss = totals.front();
        for (std::size_t k = 1; k < totals.size(); ++k) batch_loss = add(batch_loss, totals[k]);
        batch_loss = mul_scalar(batch_loss, inv);
        params.zero_grad();
        head.params.zero_grad();
        backward(batch_loss);
        try {
          step_all(params, phase == 0 ? &head.params : nullptr, state, &head_state);
        } catch (const NonFiniteGradient& err) {
          throw TrainingAborted(std::string(err.what()) + "; last good checkpoint retained");
        }
      }

      EpochLog log;
      log.epoch = global_epoch;
      log.phase = phase;
      const double n = static_cast<double>(train_set.size());
      log.loss = total_loss(sums.l_r / n, sums.l_p / n, sums.l_l_object / n, sums.l_l_context / n, config.loss);
      if (phase == 0) {
        log.val_map = pretrain_val_map(model, head, val_set);
      } else {
        log.val_map = mean_average_precision(predict_records(model, config.loss, val_set, BranchSelect::kFused)).value;
        if (!have_best || log.val_map > result.best_val_map) {
          have_best = true;
          result.best_val_map = log.val_map;
          result.best_epoch = global_epoch;
          best = params.snapshot();
          if (!options.checkpoint_path.empty()) save_checkpoint(options.checkpoint_path, params, blob);
        }
      }
      result.log.push_back(log);
      if (options.on_epoch) options.on_epoch(log);

      if (log.val_map - std::max(phase_best, 0.0) < config.converge_min_delta && phase_best >= 0) {
        ++stalled;
      } else {
        stalled = 0;
      }
      phase_best = std::max(phase_best, log.val_map);
      if (phase > 0) lr *= config.lr_epoch_multiplier;
      state.learning_rate = phase == 0 ? state.learning_rate * config.lr_epoch_multiplier : lr;
      head_state.learning_rate = state.learning_rate;
      if (stalled >= config.converge_patience) break;
    }
    result.backbone_after_phase.push_back(backbone_values(model));
  }
  params.unfreeze_all();

  // The returned model matches what a reload of the checkpoint produces.
  if (have_best) params.assign(best);
  load_into(params, deserialize_checkpoint(serialize_checkpoint(params, blob)));
  return result;
}

}  // namespace ctxnet
