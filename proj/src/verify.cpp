#include "ctxnet/verify.hpp"

#include "ctxnet/gradcheck.hpp"
#include "ctxnet/losses.hpp"
#include "ctxnet/model.hpp"
#include "ctxnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace ctxnet {

namespace {

using Fn = std::function<Tensor(const std::vector<Tensor>&)>;

Tensor uniform(Shape shape, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  VectorXd v(numel(shape));
  for (Index i = 0; i < v.size(); ++i) v[i] = d(rng);
  return Tensor(std::move(shape), std::move(v));
}

// Values at least `gap` away from every point in `kinks`.
Tensor away_from(Shape shape, std::mt19937_64& rng, double lo, double hi, std::vector<double> kinks, double gap) {
  std::uniform_real_distribution<double> d(lo, hi);
  VectorXd v(numel(shape));
  for (Index i = 0; i < v.size(); ++i) {
    double x;
    do {
      x = d(rng);
    } while (std::any_of(kinks.begin(), kinks.end(), [&](double k) { return std::abs(x - k) < gap; }));
    v[i] = x;
  }
  return Tensor(std::move(shape), std::move(v));
}

// Distinct values spaced by at least 0.05, shuffled, so max ties never flip.
Tensor distinct(Shape shape, std::mt19937_64& rng) {
  const Index n = numel(shape);
  VectorXd v(n);
  std::uniform_real_distribution<double> jitter(0.0, 0.01);
  for (Index i = 0; i < n; ++i) v[i] = -1.0 + 0.05 * static_cast<double>(i) + jitter(rng);
  std::shuffle(v.data(), v.data() + n, rng);
  return Tensor(std::move(shape), std::move(v));
}

CheckReport run(const std::string& name, const Fn& fn, std::vector<Tensor> inputs, std::uint64_t seed,
                double tolerance = kOperatorTolerance) {
  GradCheckOptions opts;
  opts.seed = seed;
  opts.samples_per_input = 24;
  const GradCheckResult r = grad_check(fn, std::move(inputs), opts);
  return {name, r.max_rel_error, tolerance, r.checked};
}

}  // namespace

std::vector<CheckReport> operator_gradchecks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::uint64_t ps = seed * 7919 + 11;
  std::vector<CheckReport> out;
  auto proj = [ps](const Tensor& t) { return random_projection(t, ps); };

  out.push_back(run("conv2d", [&](const auto& in) { return proj(conv2d(in[0], in[1], in[2], 2, 1)); },
                    {uniform({2, 7, 6}, rng, -1, 1), uniform({3, 2, 3, 3}, rng, -1, 1), uniform({3}, rng, -1, 1)}, seed));
  out.push_back(run("conv2d_1x1", [&](const auto& in) { return proj(conv2d(in[0], in[1], in[2], 1, 0)); },
                    {uniform({3, 4, 4}, rng, -1, 1), uniform({2, 3, 1, 1}, rng, -1, 1), uniform({2}, rng, -1, 1)}, seed));
  out.push_back(run("maxpool2d", [&](const auto& in) { return proj(maxpool2d(in[0], 2, 2)); },
                    {distinct({2, 4, 4}, rng)}, seed));
  out.push_back(run("upsample_nearest", [&](const auto& in) { return proj(upsample_nearest(in[0], 2)); },
                    {uniform({2, 3, 2}, rng, -1, 1)}, seed));
  out.push_back(run("region_avg_pool",
                    [&](const auto& in) { return proj(region_avg_pool(in[0], Region{0.5, 1.25, 5.5, 4.75}, 3)); },
                    {uniform({2, 6, 6}, rng, -1, 1)}, seed));
  out.push_back(run("dense", [&](const auto& in) { return proj(dense(in[0], in[1], in[2])); },
                    {uniform({3, 5}, rng, -1, 1), uniform({4, 5}, rng, -1, 1), uniform({4}, rng, -1, 1)}, seed));
  out.push_back(run("relu", [&](const auto& in) { return proj(relu(in[0])); },
                    {away_from({12}, rng, -2, 2, {0.0}, 0.05)}, seed));
  out.push_back(run("logistic", [&](const auto& in) { return proj(logistic(in[0])); },
                    {uniform({12}, rng, -6, 6)}, seed));
  out.push_back(run("log", [&](const auto& in) { return proj(log(in[0])); }, {uniform({12}, rng, 0.2, 3)}, seed));
  out.push_back(run("clamp", [&](const auto& in) { return proj(clamp(in[0], -0.5, 0.5)); },
                    {away_from({12}, rng, -1, 1, {-0.5, 0.5}, 0.05)}, seed));
  out.push_back(run("smooth_l1", [&](const auto& in) { return proj(smooth_l1(in[0])); },
                    {away_from({12}, rng, -3, 3, {-1.0, 1.0}, 0.05)}, seed));
  out.push_back(run("add", [&](const auto& in) { return proj(add(in[0], in[1])); },
                    {uniform({2, 3}, rng, -1, 1), uniform({2, 3}, rng, -1, 1)}, seed));
  out.push_back(run("sub", [&](const auto& in) { return proj(sub(in[0], in[1])); },
                    {uniform({2, 3}, rng, -1, 1), uniform({2, 3}, rng, -1, 1)}, seed));
  out.push_back(run("mul", [&](const auto& in) { return proj(mul(in[0], in[1])); },
                    {uniform({2, 3}, rng, -1, 1), uniform({2, 3}, rng, -1, 1)}, seed));
  out.push_back(run("mul_scalar", [&](const auto& in) { return proj(mul_scalar(in[0], -1.7)); },
                    {uniform({5}, rng, -1, 1)}, seed));
  out.push_back(run("add_scalar", [&](const auto& in) { return proj(add_scalar(in[0], 0.3)); },
                    {uniform({5}, rng, -1, 1)}, seed));
  out.push_back(run("sum", [&](const auto& in) { return mul_scalar(sum(in[0]), 1.3); }, {uniform({2, 4}, rng, -1, 1)}, seed));
  out.push_back(run("mean", [&](const auto& in) { return mul_scalar(mean(in[0]), 1.3); }, {uniform({2, 4}, rng, -1, 1)}, seed));
  out.push_back(run("reshape", [&](const auto& in) { return proj(reshape(in[0], {3, 2})); },
                    {uniform({2, 3}, rng, -1, 1)}, seed));
  out.push_back(run("gather", [&](const auto& in) { return proj(gather(in[0], {4, 0, 4, 2})); },
                    {uniform({6}, rng, -1, 1)}, seed));
  out.push_back(run("concat", [&](const auto& in) { return proj(concat({in[0], in[1]})); },
                    {uniform({3}, rng, -1, 1), uniform({2, 2}, rng, -1, 1)}, seed));
  out.push_back(run("stack_rows", [&](const auto& in) { return proj(stack_rows({in[0], in[1]})); },
                    {uniform({3}, rng, -1, 1), uniform({3}, rng, -1, 1)}, seed));
  out.push_back(run("max_rows", [&](const auto& in) { return proj(max_rows(in[0])); }, {distinct({4, 3}, rng)}, seed));
  out.push_back(run("scale_rows", [&](const auto& in) { return proj(scale_rows(in[0], in[1])); },
                    {uniform({3, 4}, rng, -1, 1), uniform({3}, rng, -1, 1)}, seed));

  const Tensor targets(Shape{6}, (VectorXd(6) << 1, 0, 1, 1, 0, 0).finished());
  out.push_back(run("binary_cross_entropy", [&](const auto& in) { return binary_cross_entropy(in[0], targets); },
                    {uniform({6}, rng, 0.05, 0.95)}, seed));
  LossConfig squash;
  out.push_back(run("label_probability_squash",
                    [&](const auto& in) { return proj(label_probability(in[0], squash)); },
                    {uniform({2, 3}, rng, -4, 4)}, seed));
  LossConfig literal;
  literal.sigma_mode = SigmaMode::kLiteral;
  out.push_back(run("label_probability_literal",
                    [&](const auto& in) { return proj(label_probability(in[0], literal)); },
                    {uniform({2, 3}, rng, 0.05, 0.95)}, seed));
  out.push_back(run("location_loss_quadratic", [&](const auto& in) { return location_loss(in[0], in[1]); },
                    {uniform({3, 4}, rng, -0.3, 0.3), uniform({3, 4}, rng, -0.3, 0.3)}, seed));
  out.push_back(run("location_loss_linear", [&](const auto& in) { return location_loss(in[0], in[1]); },
                    {uniform({3, 4}, rng, 1.5, 2.5), uniform({3, 4}, rng, -0.3, 0.3)}, seed));
  Tensor probs = distinct({3, 4}, rng);
  probs.value().array() += 1.1;
  out.push_back(run("aggregate_patch_labels",
                    [&](const auto& in) { return proj(aggregate_patch_labels(in[0], in[1], 4)); },
                    {probs, uniform({3}, rng, 0.3, 0.9)}, seed));
  return out;
}

CheckReport micro_model_gradcheck(std::uint64_t seed) {
  ModelConfig cfg;
  cfg.image_size = 16;
  cfg.stage_channels = {3, 4, 4, 4};
  cfg.pyramid_channels = 4;
  cfg.rpn_channels = 4;
  cfg.head_hidden = 6;
  cfg.pool_grid = 2;
  cfg.anchors = AnchorConfig{{{8, {6.0}}, {16, {12.0}}}, {1.0, 0.5, 2.0}};
  cfg.pre_nms_top_n = 8;
  cfg.top_k = 3;
  Model model(cfg, seed);

  std::mt19937_64 rng(seed + 1);
  // Zero biases put all-zero receptive fields exactly on a ReLU kink.
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  for (auto& [name, t] : model.params().entries())
    if (name.size() > 2 && name.compare(name.size() - 2, 2, ".b") == 0)
      for (Index i = 0; i < t.size(); ++i) t.value()[i] = jitter(rng);
  Sample sample;
  sample.id = "micro";
  sample.image = uniform({3, 16, 16}, rng, 0, 1);
  sample.labels.assign(static_cast<std::size_t>(cfg.num_categories), 0);
  sample.labels[kSquare] = 1;
  sample.labels[kDot] = 1;
  sample.boxes = {{kSquare, Box{6.5, 7.0, 7.0, 6.0}}, {kDot, Box{12.0, 12.5, 3.0, 3.0}}};

  LossConfig loss;
  TargetConfig targets;
  targets.anchor_samples = 8;
  std::vector<Tensor> params;
  for (const auto& [name, t] : model.params().entries()) params.push_back(t);

  // Patch boxes are graph constants, so they stay fixed while parameters move.
  // Parameters are shared handles, so perturbing `in` perturbs the model.
  const std::vector<Box> patches = model.training_patches(sample, targets);
  const Fn fn = [&](const std::vector<Tensor>&) {
    std::mt19937_64 sampler(seed + 2);
    return model.training_loss(sample, patches, loss, targets, sampler).total;
  };
  GradCheckOptions opts;
  opts.seed = seed;
  opts.samples_per_input = 6;
  opts.step = 1e-6;
  const GradCheckResult r = grad_check(fn, params, opts);
  return {"micro_model_end_to_end", r.max_rel_error, kMicroModelTolerance, r.checked};
}

}  // namespace ctxnet
