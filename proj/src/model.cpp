#include "ctxnet/model.hpp"

#include "ctxnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ctxnet {

std::string to_string(FusionMode mode) { return mode == FusionMode::kMax ? "max" : "mean"; }

FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "max") return FusionMode::kMax;
  if (s == "mean") return FusionMode::kMean;
  throw std::invalid_argument("fusion mode must be 'max' or 'mean', got '" + s + "'");
}

BranchSelect branch_from_string(const std::string& s) {
  if (s == "object") return BranchSelect::kObject;
  if (s == "context") return BranchSelect::kContext;
  if (s == "fused") return BranchSelect::kFused;
  throw std::invalid_argument("branch must be object, context or fused, got '" + s + "'");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& why) { throw std::invalid_argument("model config: " + why); };
  if (image_size <= 0 || in_channels <= 0) fail("image size and channels must be positive");
  if (stage_channels.empty()) fail("no backbone stages");
  if (convs_per_stage < 1) fail("convs_per_stage must be >= 1");
  if (pyramid_stages.empty()) fail("no pyramid levels");
  for (std::size_t i = 0; i < pyramid_stages.size(); ++i) {
    const int s = pyramid_stages[i];
    if (s < 0 || s >= static_cast<int>(stage_channels.size())) fail("pyramid level references a missing stage");
    if (i > 0 && s <= pyramid_stages[i - 1]) fail("pyramid stages must be strictly increasing");
  }
  const int coarsest = stage_stride(static_cast<int>(stage_channels.size()) - 1);
  if (image_size % coarsest != 0) fail("image size must be divisible by the coarsest stage stride");
  if (anchors.levels.size() != pyramid_stages.size()) fail("one anchor level per pyramid level required");
  for (std::size_t l = 0; l < anchors.levels.size(); ++l) {
    if (anchors.levels[l].stride != stage_stride(pyramid_stages[l])) fail("anchor stride differs from pyramid stride");
    if (anchors.levels[l].sizes.size() != anchors.levels[0].sizes.size()) {
      fail("every anchor level needs the same number of sizes (shared proposal head)");
    }
  }
  if (pyramid_channels <= 0 || rpn_channels <= 0 || head_hidden <= 0 || pool_grid <= 0) fail("widths must be positive");
  if (num_categories <= 0) fail("num_categories must be positive");
  if (top_k <= 0 || pre_nms_top_n <= 0) fail("top_k and pre_nms_top_n must be positive");
  if (!(expansion >= 1.0)) fail("expansion factor must be >= 1");
  if (!(nms_iou > 0 && nms_iou <= 1)) fail("nms_iou must lie in (0,1]");
}

nlohmann::ordered_json to_json(const ModelConfig& c) {
  nlohmann::ordered_json levels = nlohmann::ordered_json::array();
  for (const auto& l : c.anchors.levels) levels.push_back({{"stride", l.stride}, {"sizes", l.sizes}});
  return {{"image_size", c.image_size},
          {"in_channels", c.in_channels},
          {"stage_channels", c.stage_channels},
          {"convs_per_stage", c.convs_per_stage},
          {"pyramid_stages", c.pyramid_stages},
          {"pyramid_channels", c.pyramid_channels},
          {"rpn_channels", c.rpn_channels},
          {"pool_grid", c.pool_grid},
          {"head_hidden", c.head_hidden},
          {"num_categories", c.num_categories},
          {"anchor_levels", levels},
          {"anchor_ratios", c.anchors.ratios},
          {"pre_nms_top_n", c.pre_nms_top_n},
          {"top_k", c.top_k},
          {"nms_iou", c.nms_iou},
          {"expansion", c.expansion},
          {"fusion", to_string(c.fusion)},
          {"label_threshold", c.label_threshold}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.image_size = j.at("image_size").get<int>();
  c.in_channels = j.at("in_channels").get<int>();
  c.stage_channels = j.at("stage_channels").get<std::vector<int>>();
  c.convs_per_stage = j.at("convs_per_stage").get<int>();
  c.pyramid_stages = j.at("pyramid_stages").get<std::vector<int>>();
  c.pyramid_channels = j.at("pyramid_channels").get<int>();
  c.rpn_channels = j.at("rpn_channels").get<int>();
  c.pool_grid = j.at("pool_grid").get<int>();
  c.head_hidden = j.at("head_hidden").get<int>();
  c.num_categories = j.at("num_categories").get<int>();
  c.anchors.levels.clear();
  for (const auto& l : j.at("anchor_levels")) {
    c.anchors.levels.push_back({l.at("stride").get<int>(), l.at("sizes").get<std::vector<double>>()});
  }
  c.anchors.ratios = j.at("anchor_ratios").get<std::vector<double>>();
  c.pre_nms_top_n = j.at("pre_nms_top_n").get<int>();
  c.top_k = j.at("top_k").get<int>();
  c.nms_iou = j.at("nms_iou").get<double>();
  c.expansion = j.at("expansion").get<double>();
  c.fusion = fusion_mode_from_string(j.at("fusion").get<std::string>());
  c.label_threshold = j.at("label_threshold").get<double>();
  c.validate();
  return c;
}

LossBreakdown LossTerms::values() const {
  return {l_r.item(), l_p.item(), l_l_object.item(), l_l_context.item(), total.item()};
}

Tensor aggregate_patch_labels(const Tensor& label_prob, const Tensor& existence, int num_categories) {
  if (!label_prob.defined() || label_prob.size() == 0) {
    return Tensor(Shape{num_categories}, VectorXd::Constant(num_categories, kProbEpsilon));
  }
  if (label_prob.rank() != 2 || label_prob.dim(1) != num_categories) {
    throw std::invalid_argument("aggregate_patch_labels: expected (P," + std::to_string(num_categories) + "), got " +
                                shape_str(label_prob.shape()));
  }
  return clamp(max_rows(scale_rows(label_prob, existence)), kProbEpsilon, 1.0 - kProbEpsilon);
}

VectorXd fuse_branches(const VectorXd& object, const VectorXd& context, FusionMode mode) {
  if (object.size() != context.size()) {
    throw std::invalid_argument("fuse_branches: lengths differ (" + std::to_string(object.size()) + " vs " +
                                std::to_string(context.size()) + ")");
  }
  if (mode == FusionMode::kMax) return object.cwiseMax(context);
  return 0.5 * (object + context);
}

std::size_t assign_level(const Box& box, const std::vector<int>& strides, int grid) {
  const double per_bin = std::max(box.w, box.h) / grid;
  std::size_t chosen = 0;
  for (std::size_t l = 0; l < strides.size(); ++l)
    if (strides[l] <= per_bin) chosen = l;
  return chosen;
}

Tensor roi_pool(const PyramidFeatures& feat, const Box& box, int grid) {
  if (!(box.w >= 1.0 && box.h >= 1.0)) {
    throw std::invalid_argument("roi_pool: degenerate box (w=" + std::to_string(box.w) + ", h=" + std::to_string(box.h) +
                                ")");
  }
  const std::size_t level = assign_level(box, feat.strides, grid);
  const double s = feat.strides[level];
  return region_avg_pool(feat.levels[level], Region{box.x0() / s, box.y0() / s, box.x1() / s, box.y1() / s}, grid);
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const auto& sc = config_.stage_channels;
  for (std::size_t s = 0; s < sc.size(); ++s) {
    const int in = s == 0 ? config_.in_channels : sc[s - 1];
    for (int j = 0; j < config_.convs_per_stage; ++j) {
      add_conv("backbone.s" + std::to_string(s) + ".c" + std::to_string(j), j == 0 ? in : sc[s], sc[s], 3, rng);
    }
  }
  for (std::size_t l = 0; l < config_.pyramid_stages.size(); ++l) {
    add_conv("pyramid.lat" + std::to_string(l), sc[static_cast<std::size_t>(config_.pyramid_stages[l])],
             config_.pyramid_channels, 1, rng);
    add_conv("pyramid.out" + std::to_string(l), config_.pyramid_channels, config_.pyramid_channels, 3, rng);
  }
  const int per_cell = static_cast<int>(config_.anchors.levels[0].sizes.size() * config_.anchors.ratios.size());
  add_conv("rpn.conv", config_.pyramid_channels, config_.rpn_channels, 3, rng);
  add_conv("rpn.cls", config_.rpn_channels, per_cell, 1, rng);
  add_conv("rpn.reg", config_.rpn_channels, 4 * per_cell, 1, rng);
  const int pooled = config_.pyramid_channels * config_.pool_grid * config_.pool_grid;
  const std::pair<const char*, int> heads[] = {{"head.cls", 1},
                                               {"head.reg", 4},
                                               {"head.obj_label", config_.num_categories},
                                               {"head.ctx_label", config_.num_categories}};
  for (const auto& [name, out] : heads) {
    add_dense(std::string(name) + ".fc1", pooled, config_.head_hidden, rng);
    add_dense(std::string(name) + ".fc2", config_.head_hidden, out, rng);
  }

  anchors_ = generate_anchors(config_.image_size, config_.image_size, config_.anchors);
  for (std::size_t l = 0; l < config_.anchors.levels.size(); ++l) {
    const Index H = anchors_.cells_y[l], W = anchors_.cells_x[l];
    std::vector<Index> order;
    const std::size_t begin = anchors_.level_offset[l];
    const std::size_t end = l + 1 < anchors_.level_offset.size() ? anchors_.level_offset[l + 1] : anchors_.anchors.size();
    for (std::size_t i = begin; i < end; ++i) {
      const Anchor& a = anchors_.anchors[i];
      const Index channel = a.size_index * static_cast<Index>(config_.anchors.ratios.size()) + a.ratio_index;
      order.push_back(channel * H * W + a.cell_y * W + a.cell_x);
    }
    objectness_order_.push_back(std::move(order));
  }
}

std::vector<Box> Model::anchor_boxes() const {
  std::vector<Box> boxes;
  boxes.reserve(anchors_.anchors.size());
  for (const auto& a : anchors_.anchors) boxes.push_back(a.box);
  return boxes;
}

void Model::add_conv(const std::string& name, int in, int out, int k, std::mt19937_64& rng) {
  params_.add(name + ".w", init_uniform_fan_in(Shape{out, in, k, k}, in * k * k, rng));
  params_.add(name + ".b", Tensor(Shape{out}, true));
}

void Model::add_dense(const std::string& name, int in, int out, std::mt19937_64& rng) {
  params_.add(name + ".w", init_uniform_fan_in(Shape{out, in}, in, rng));
  params_.add(name + ".b", Tensor(Shape{out}, true));
}

Tensor Model::conv(const std::string& name, const Tensor& x, int stride, int pad) const {
  return conv2d(x, params_.at(name + ".w"), params_.at(name + ".b"), stride, pad);
}

Tensor Model::mlp(const std::string& name, const Tensor& x) const {
  const Tensor h = relu(dense(x, params_.at(name + ".fc1.w"), params_.at(name + ".fc1.b")));
  return dense(h, params_.at(name + ".fc2.w"), params_.at(name + ".fc2.b"));
}

PyramidFeatures Model::extract_features(const Tensor& image) const {
  const int n = config_.image_size;
  if (image.rank() != 3 || image.dim(0) != config_.in_channels || image.dim(1) != n || image.dim(2) != n) {
    throw std::invalid_argument("extract_features: image shape " + shape_str(image.shape()) + " does not match " +
                                shape_str({config_.in_channels, n, n}));
  }
  std::vector<Tensor> stages;
  Tensor x = image;
  for (std::size_t s = 0; s < config_.stage_channels.size(); ++s) {
    for (int j = 0; j < config_.convs_per_stage; ++j) {
      x = relu(conv("backbone.s" + std::to_string(s) + ".c" + std::to_string(j), x, j == 0 ? 2 : 1, 1));
    }
    stages.push_back(x);
  }

  PyramidFeatures feat;
  const std::size_t L = config_.pyramid_stages.size();
  std::vector<Tensor> merged(L);
  for (std::size_t i = L; i-- > 0;) {
    Tensor lateral = conv("pyramid.lat" + std::to_string(i), stages[static_cast<std::size_t>(config_.pyramid_stages[i])], 1, 0);
    if (i + 1 < L) {
      const int ratio = config_.stage_stride(config_.pyramid_stages[i + 1]) / config_.stage_stride(config_.pyramid_stages[i]);
      lateral = add(lateral, upsample_nearest(merged[i + 1], ratio));
    }
    merged[i] = lateral;
  }
  for (std::size_t i = 0; i < L; ++i) {
    feat.levels.push_back(conv("pyramid.out" + std::to_string(i), merged[i], 1, 1));
    feat.strides.push_back(config_.stage_stride(config_.pyramid_stages[i]));
  }
  feat.top_stage = stages.back();
  return feat;
}

ProposalScores Model::propose(const PyramidFeatures& feat) const {
  std::vector<Tensor> objectness, deltas;
  for (std::size_t l = 0; l < feat.levels.size(); ++l) {
    const Tensor h = relu(conv("rpn.conv", feat.levels[l], 1, 1));
    const Tensor cls = conv("rpn.cls", h, 1, 0);
    const Tensor reg = conv("rpn.reg", h, 1, 0);
    const Index hw = static_cast<Index>(cls.dim(1)) * cls.dim(2);
    std::vector<Index> delta_order;
    delta_order.reserve(objectness_order_[l].size() * 4);
    for (Index flat : objectness_order_[l]) {
      const Index channel = flat / hw, cell = flat % hw;
      for (Index j = 0; j < 4; ++j) delta_order.push_back((channel * 4 + j) * hw + cell);
    }
    objectness.push_back(gather(cls, objectness_order_[l]));
    deltas.push_back(gather(reg, delta_order));
  }
  return {concat(objectness), concat(deltas)};
}

std::vector<Box> Model::select_proposals(const ProposalScores& scores, std::size_t top_k) const {
  const double n = config_.image_size;
  std::vector<Box> candidates;
  std::vector<double> cand_scores;
  const auto& obj = scores.objectness.value();
  const auto& del = scores.deltas.value();
  for (std::size_t i = 0; i < anchors_.anchors.size(); ++i) {
    const Index k = static_cast<Index>(i);
    const Box decoded = decode_box_delta(anchors_.anchors[i].box, {del[4 * k], del[4 * k + 1], del[4 * k + 2], del[4 * k + 3]});
    const auto clipped = clip_box(decoded, n, n);
    if (!clipped || clipped->w < 1.0 || clipped->h < 1.0) continue;
    candidates.push_back(*clipped);
    cand_scores.push_back(obj[k]);
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cand_scores[a] > cand_scores[b]; });
  order.resize(std::min(order.size(), static_cast<std::size_t>(config_.pre_nms_top_n)));
  std::vector<Box> pre;
  std::vector<double> pre_scores;
  for (std::size_t i : order) {
    pre.push_back(candidates[i]);
    pre_scores.push_back(cand_scores[i]);
  }
  std::vector<Box> kept;
  for (std::size_t i : nms(pre, pre_scores, config_.nms_iou, top_k)) kept.push_back(pre[i]);
  return kept;
}

Tensor Model::pool_patches(const PyramidFeatures& feat, const std::vector<Box>& boxes) const {
  std::vector<Tensor> rows;
  rows.reserve(boxes.size());
  for (const Box& b : boxes) rows.push_back(roi_pool(feat, b, config_.pool_grid));
  return stack_rows(rows);
}

BranchOutputs Model::object_branch(const PyramidFeatures& feat, const std::vector<Box>& patches,
                                   const LossConfig& loss) const {
  BranchOutputs out;
  out.boxes = patches;
  if (patches.empty()) {
    out.aggregated = aggregate_patch_labels(Tensor(), Tensor(), config_.num_categories);
    return out;
  }
  const Tensor pooled = pool_patches(feat, patches);
  const int P = static_cast<int>(patches.size());
  out.existence = logistic(reshape(mlp("head.cls", pooled), Shape{P}));
  out.deltas = mlp("head.reg", pooled);
  out.label_prob = label_probability(mlp("head.obj_label", pooled), loss);
  out.aggregated = aggregate_patch_labels(out.label_prob, out.existence, config_.num_categories);
  return out;
}

BranchOutputs Model::context_branch(const PyramidFeatures& feat, const BranchOutputs& object, double factor,
                                    const LossConfig& loss) const {
  BranchOutputs out;
  const double n = config_.image_size;
  for (const Box& b : object.boxes) out.boxes.push_back(expand_patch(b, factor, n, n));
  if (out.boxes.empty()) {
    out.aggregated = aggregate_patch_labels(Tensor(), Tensor(), config_.num_categories);
    return out;
  }
  out.existence = object.existence;
  out.label_prob = label_probability(mlp("head.ctx_label", pool_patches(feat, out.boxes)), loss);
  out.aggregated = aggregate_patch_labels(out.label_prob, out.existence, config_.num_categories);
  return out;
}

ImagePrediction Model::predict(const Tensor& image, const LossConfig& loss) const {
  NoGradGuard no_grad;
  const PyramidFeatures feat = extract_features(image);
  const auto proposals = select_proposals(propose(feat), static_cast<std::size_t>(config_.top_k));
  const BranchOutputs obj = object_branch(feat, proposals, loss);
  const BranchOutputs ctx = context_branch(feat, obj, config_.expansion, loss);

  ImagePrediction pred;
  pred.object = obj.aggregated.value();
  pred.context = ctx.aggregated.value();
  pred.fused = fuse_branches(pred.object, pred.context, config_.fusion);
  for (int c = 0; c < config_.num_categories; ++c)
    if (pred.fused[c] > config_.label_threshold) pred.labels.push_back(c);

  const double n = config_.image_size;
  const int C = config_.num_categories;
  for (std::size_t i = 0; i < obj.count(); ++i) {
    const Index r = static_cast<Index>(i);
    const double p = obj.existence[r];
    VectorXd qo = p * obj.label_prob.value().segment(r * C, C);
    VectorXd qc = p * ctx.label_prob.value().segment(r * C, C);
    const VectorXd q = fuse_branches(qo, qc, config_.fusion);
    Index best = 0;
    q.maxCoeff(&best);
    const auto& d = obj.deltas.value();
    const Box refined = decode_box_delta(obj.boxes[i], {d[4 * r], d[4 * r + 1], d[4 * r + 2], d[4 * r + 3]});
    pred.detections.push_back({obj.boxes[i], clip_box(refined, n, n).value_or(obj.boxes[i]), ctx.boxes[i],
                               static_cast<int>(best), q[best], p});
  }
  return pred;
}

std::vector<Box> Model::patches_from(const ProposalScores& scores, const Sample& sample,
                                     const TargetConfig& targets) const {
  std::vector<Box> patches;
  {
    NoGradGuard no_grad;
    patches = select_proposals(scores, static_cast<std::size_t>(config_.top_k));
  }
  if (targets.train_with_gt_patches)
    for (const auto& lb : sample.boxes) patches.push_back(lb.box);
  return patches;
}

std::vector<Box> Model::training_patches(const Sample& sample, const TargetConfig& targets) const {
  NoGradGuard no_grad;
  return patches_from(propose(extract_features(sample.image)), sample, targets);
}

LossTerms Model::training_loss(const Sample& sample, const LossConfig& loss, const TargetConfig& targets,
                               std::mt19937_64& rng) const {
  const PyramidFeatures feat = extract_features(sample.image);
  const ProposalScores scores = propose(feat);
  return loss_terms(feat, scores, sample, patches_from(scores, sample, targets), loss, targets, rng);
}

LossTerms Model::training_loss(const Sample& sample, const std::vector<Box>& patches, const LossConfig& loss,
                               const TargetConfig& targets, std::mt19937_64& rng) const {
  const PyramidFeatures feat = extract_features(sample.image);
  return loss_terms(feat, propose(feat), sample, patches, loss, targets, rng);
}

LossTerms Model::loss_terms(const PyramidFeatures& feat, const ProposalScores& scores, const Sample& sample,
                            const std::vector<Box>& patches, const LossConfig& loss, const TargetConfig& targets,
                            std::mt19937_64& rng) const {
  std::vector<Box> gt;
  for (const auto& lb : sample.boxes) gt.push_back(lb.box);

  // Proposal head: sampled anchors for existence, positive anchors for deltas.
  const auto anchor_list = anchor_boxes();
  const auto matches = match_anchors(anchor_list, gt, targets.pos_iou, targets.neg_iou);
  std::vector<Index> pos, neg;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (matches[i].kind == MatchKind::kPositive) pos.push_back(static_cast<Index>(i));
    if (matches[i].kind == MatchKind::kNegative) neg.push_back(static_cast<Index>(i));
  }
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  const std::size_t half = static_cast<std::size_t>(targets.anchor_samples / 2);
  if (pos.size() > half) pos.resize(half);
  neg.resize(std::min(neg.size(), static_cast<std::size_t>(targets.anchor_samples) - pos.size()));

  std::vector<Index> sampled(pos);
  sampled.insert(sampled.end(), neg.begin(), neg.end());
  VectorXd anchor_target = VectorXd::Zero(static_cast<Index>(sampled.size()));
  anchor_target.head(static_cast<Index>(pos.size())).setOnes();
  Tensor l_p = mul_scalar(
      binary_cross_entropy(logistic(gather(scores.objectness, sampled)), Tensor(Shape{static_cast<int>(sampled.size())}, anchor_target)),
      1.0 / static_cast<double>(sampled.size()));

  Tensor l_r = Tensor::scalar(0.0);
  if (!pos.empty()) {
    std::vector<Index> idx;
    VectorXd tgt(static_cast<Index>(pos.size()) * 4);
    for (std::size_t k = 0; k < pos.size(); ++k) {
      const std::size_t a = static_cast<std::size_t>(pos[k]);
      for (Index j = 0; j < 4; ++j) idx.push_back(pos[k] * 4 + j);
      const BoxDelta d = encode_box_delta(anchor_list[a], gt[static_cast<std::size_t>(matches[a].gt_index)]);
      tgt.segment(static_cast<Index>(k) * 4, 4) << d.dx, d.dy, d.dw, d.dh;
    }
    const Shape s{static_cast<int>(pos.size()), 4};
    l_r = location_loss(reshape(gather(scores.deltas, idx), s), Tensor(s, tgt));
  }

  // Patch processors.
  const BranchOutputs obj = object_branch(feat, patches, loss);
  const BranchOutputs ctx = context_branch(feat, obj, config_.expansion, loss);

  if (!patches.empty()) {
    const auto pm = match_anchors(patches, gt, targets.pos_iou, targets.neg_iou);
    std::vector<Index> scored, positive;
    VectorXd target(static_cast<Index>(patches.size()));
    for (std::size_t i = 0; i < pm.size(); ++i) {
      if (pm[i].kind == MatchKind::kIgnore) continue;
      scored.push_back(static_cast<Index>(i));
      target[static_cast<Index>(scored.size()) - 1] = pm[i].kind == MatchKind::kPositive ? 1.0 : 0.0;
      if (pm[i].kind == MatchKind::kPositive) positive.push_back(static_cast<Index>(i));
    }
    if (!scored.empty()) {
      const int n = static_cast<int>(scored.size());
      l_p = add(l_p, mul_scalar(binary_cross_entropy(gather(obj.existence, scored), Tensor(Shape{n}, target.head(n))),
                                1.0 / n));
    }
    if (!positive.empty()) {
      std::vector<Index> idx;
      VectorXd tgt(static_cast<Index>(positive.size()) * 4);
      for (std::size_t k = 0; k < positive.size(); ++k) {
        const std::size_t p = static_cast<std::size_t>(positive[k]);
        for (Index j = 0; j < 4; ++j) idx.push_back(positive[k] * 4 + j);
        const BoxDelta d = encode_box_delta(patches[p], gt[static_cast<std::size_t>(pm[p].gt_index)]);
        tgt.segment(static_cast<Index>(k) * 4, 4) << d.dx, d.dy, d.dw, d.dh;
      }
      const Shape s{static_cast<int>(positive.size()), 4};
      l_r = add(l_r, location_loss(reshape(gather(obj.deltas, idx), s), Tensor(s, tgt)));
    }
  }

  VectorXd y(config_.num_categories);
  for (int c = 0; c < config_.num_categories; ++c) y[c] = sample.labels.at(static_cast<std::size_t>(c));
  const Tensor labels(Shape{config_.num_categories}, y);
  LossTerms terms;
  terms.l_r = l_r;
  terms.l_p = l_p;
  terms.l_l_object = binary_cross_entropy(obj.aggregated, labels);
  terms.l_l_context = binary_cross_entropy(ctx.aggregated, labels);
  terms.total = add(add(l_r, mul_scalar(l_p, loss.alpha)),
                    add(mul_scalar(terms.l_l_object, loss.beta), mul_scalar(terms.l_l_context, loss.gamma)));
  return terms;
}

}  // namespace ctxnet
