#pragma once

#include "ctxnet/data.hpp"
#include "ctxnet/geometry.hpp"
#include "ctxnet/losses.hpp"
#include "ctxnet/optim.hpp"
#include "ctxnet/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ctxnet {

enum class FusionMode { kMax, kMean };
std::string to_string(FusionMode mode);
FusionMode fusion_mode_from_string(const std::string& s);

/// Which confidence vector a prediction reports; used for branch ablations.
enum class BranchSelect { kObject, kContext, kFused };
BranchSelect branch_from_string(const std::string& s);

struct ModelConfig {
  int image_size = 64;
  int in_channels = 3;
  std::vector<int> stage_channels{8, 16, 32, 64};  // each stage halves resolution
  int convs_per_stage = 2;                          // stride-2 conv then stride-1 convs
  std::vector<int> pyramid_stages{2, 3};            // zero-based, strictly increasing
  int pyramid_channels = 32;
  int rpn_channels = 32;
  int pool_grid = 3;
  int head_hidden = 64;
  int num_categories = kNumCategories;
  AnchorConfig anchors{{{8, {12.0}}, {16, {24.0}}}, {1.0, 0.5, 2.0}};
  int pre_nms_top_n = 64;
  int top_k = 8;
  double nms_iou = 0.5;
  double expansion = 2.0;
  FusionMode fusion = FusionMode::kMax;
  double label_threshold = 0.5;

  int stage_stride(int stage) const { return 1 << (stage + 1); }
  void validate() const;
};

nlohmann::ordered_json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Multi-level feature maps, finest first. All levels share one channel width.
struct PyramidFeatures {
  std::vector<Tensor> levels;  // (channels, H_l, W_l)
  std::vector<int> strides;
  Tensor top_stage;  // last backbone stage output
};

/// Per-anchor proposal head outputs in anchor-grid order.
struct ProposalScores {
  Tensor objectness;  // (A) logits
  Tensor deltas;      // (A*4), dx dy dw dh per anchor
};

/// Outputs of one branch for the kept patches of one image.
struct BranchOutputs {
  std::vector<Box> boxes;  // pooling regions, clipped
  Tensor existence;        // (P) p-hat; context branch shares the object branch's tensor
  Tensor deltas;           // (P,4) object branch only
  Tensor label_prob;       // (P,C) per-patch category probabilities
  Tensor aggregated;       // (C) image-level confidences
  std::size_t count() const { return boxes.size(); }
};

struct Detection {
  Box proposal;     // object patch as proposed
  Box refined;      // after the location regressor
  Box context;      // expanded patch
  int category = 0;
  double confidence = 0;  // fused p-hat * q for `category`
  double existence = 0;
};

struct ImagePrediction {
  VectorXd object;   // aggregated object-branch confidences
  VectorXd context;  // aggregated context-branch confidences
  VectorXd fused;
  std::vector<int> labels;  // categories with fused > threshold
  std::vector<Detection> detections;
};

/// Thresholds and sampling for training targets.
struct TargetConfig {
  double pos_iou = 0.5;
  double neg_iou = 0.3;
  int anchor_samples = 64;  // per image, at most half positive
  bool train_with_gt_patches = false;  // also score gt boxes as patches in the label losses
};

/// Graph-valued loss terms for one image.
struct LossTerms {
  Tensor l_r, l_p, l_l_object, l_l_context, total;
  LossBreakdown values() const;
};

/// Image-level confidence: for each category the max over patches of
/// existence * probability, clamped to [eps, 1-eps]; all eps when empty.
Tensor aggregate_patch_labels(const Tensor& label_prob, const Tensor& existence, int num_categories);

/// Elementwise max or mean of two equal-length confidence vectors.
VectorXd fuse_branches(const VectorXd& object, const VectorXd& context, FusionMode mode);

/// Picks the coarsest level whose stride <= max(w,h)/grid; the finest level
/// when none qualifies.
std::size_t assign_level(const Box& box, const std::vector<int>& strides, int grid);

/// Mean-pools `box` (image pixels, already clipped) from the assigned level.
/// Rejects boxes narrower than one pixel.
Tensor roi_pool(const PyramidFeatures& feat, const Box& box, int grid);

class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const AnchorGrid& anchors() const { return anchors_; }
  std::vector<Box> anchor_boxes() const;

  /// Prefix shared by every backbone parameter name.
  static constexpr const char* kBackbonePrefix = "backbone.";

  /// Backbone stages followed by lateral projections and top-down merging.
  PyramidFeatures extract_features(const Tensor& image) const;
  ProposalScores propose(const PyramidFeatures& feat) const;
  /// Decodes, clips, suppresses and caps proposals; no gradient.
  std::vector<Box> select_proposals(const ProposalScores& scores, std::size_t top_k) const;

  BranchOutputs object_branch(const PyramidFeatures& feat, const std::vector<Box>& patches,
                              const LossConfig& loss) const;
  BranchOutputs context_branch(const PyramidFeatures& feat, const BranchOutputs& object, double factor,
                               const LossConfig& loss) const;

  ImagePrediction predict(const Tensor& image, const LossConfig& loss) const;

  /// Full training objective for one image. `rng` drives anchor sampling.
  LossTerms training_loss(const Sample& sample, const LossConfig& loss, const TargetConfig& targets,
                          std::mt19937_64& rng) const;
  /// Same objective with the branch patches given instead of selected.
  LossTerms training_loss(const Sample& sample, const std::vector<Box>& patches, const LossConfig& loss,
                          const TargetConfig& targets, std::mt19937_64& rng) const;
  /// Patches the branches score in training: selected proposals, then the
  /// ground-truth boxes when `train_with_gt_patches` is set.
  std::vector<Box> training_patches(const Sample& sample, const TargetConfig& targets) const;

 private:
  Tensor conv(const std::string& name, const Tensor& x, int stride, int pad) const;
  Tensor mlp(const std::string& name, const Tensor& x) const;
  void add_conv(const std::string& name, int in, int out, int k, std::mt19937_64& rng);
  void add_dense(const std::string& name, int in, int out, std::mt19937_64& rng);
  Tensor pool_patches(const PyramidFeatures& feat, const std::vector<Box>& boxes) const;
  std::vector<Box> patches_from(const ProposalScores& scores, const Sample& sample, const TargetConfig& targets) const;
  LossTerms loss_terms(const PyramidFeatures& feat, const ProposalScores& scores, const Sample& sample,
                       const std::vector<Box>& patches, const LossConfig& loss, const TargetConfig& targets,
                       std::mt19937_64& rng) const;

  ModelConfig config_;
  ParamStore params_;
  AnchorGrid anchors_;
  std::vector<std::vector<Index>> objectness_order_;  // per level: anchor -> flat index in head output
};

}  // namespace ctxnet
