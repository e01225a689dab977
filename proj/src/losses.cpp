#include "ctxnet/losses.hpp"

#include "ctxnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ctxnet {

std::string to_string(SigmaMode mode) { return mode == SigmaMode::kSquash ? "squash" : "literal"; }

SigmaMode sigma_mode_from_string(const std::string& s) {
  if (s == "squash") return SigmaMode::kSquash;
  if (s == "literal") return SigmaMode::kLiteral;
  throw std::invalid_argument("sigma_mode must be 'squash' or 'literal', got '" + s + "'");
}

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

double location_loss(const BoxDelta& p, const BoxDelta& t) {
  return smooth_l1(p.dx - t.dx) + smooth_l1(p.dy - t.dy) + smooth_l1(p.dw - t.dw) + smooth_l1(p.dh - t.dh);
}

namespace {
double clamp_prob(double q) { return std::clamp(q, kProbEpsilon, 1.0 - kProbEpsilon); }

double bce_term(double q, int y) {
  q = clamp_prob(q);
  return -(y * std::log(q) + (1 - y) * std::log(1.0 - q));
}

void check_sigma(const LossConfig& config) {
  if (!(config.sigma_factor > 0.0 && config.sigma_factor <= 1.0)) {
    throw std::invalid_argument("sigma_factor must lie in (0,1]");
  }
}
}  // namespace

double patch_loss(double p_hat, int p_star) {
  if (p_star != 0 && p_star != 1) throw std::invalid_argument("patch_loss: target must be 0 or 1");
  return bce_term(p_hat, p_star);
}

double label_loss(std::span<const double> scores, std::span<const int> labels, const LossConfig& config) {
  if (scores.size() != labels.size()) throw std::invalid_argument("label_loss: score and label counts differ");
  double total = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("label_loss: labels must be 0 or 1");
    double q;
    if (config.sigma_mode == SigmaMode::kSquash) {
      q = scores[i] >= 0 ? 1.0 / (1.0 + std::exp(-scores[i])) : std::exp(scores[i]) / (1.0 + std::exp(scores[i]));
    } else {
      check_sigma(config);
      if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
        throw std::invalid_argument("label_loss: literal mode needs confidences in [0,1]");
      }
      q = config.sigma_factor * scores[i];
    }
    total += bce_term(q, labels[i]);
  }
  return total;
}

LossBreakdown total_loss(double l_r, double l_p, double l_l_object, double l_l_context, const LossConfig& c) {
  LossBreakdown b{l_r, l_p, l_l_object, l_l_context, 0.0};
  b.total = l_r + c.alpha * l_p + c.beta * l_l_object + c.gamma * l_l_context;
  return b;
}

Tensor binary_cross_entropy(const Tensor& q, const Tensor& targets) {
  const Tensor qc = clamp(q, kProbEpsilon, 1.0 - kProbEpsilon);
  const Tensor log_q = log(qc);
  const Tensor log_not_q = log(add_scalar(mul_scalar(qc, -1.0), 1.0));
  const Tensor not_y = Tensor(targets.shape(), (1.0 - targets.value().array()).matrix());
  return mul_scalar(sum(add(mul(targets, log_q), mul(not_y, log_not_q))), -1.0);
}

Tensor label_probability(const Tensor& raw, const LossConfig& config) {
  Tensor q = logistic(raw);
  if (config.sigma_mode == SigmaMode::kLiteral) {
    check_sigma(config);
    q = mul_scalar(q, config.sigma_factor);
  }
  return q;
}

Tensor location_loss(const Tensor& predicted, const Tensor& target) {
  if (predicted.shape() != target.shape() || predicted.rank() != 2 || predicted.dim(1) != 4) {
    throw std::invalid_argument("location_loss: expected matching (P,4) tensors, got " + shape_str(predicted.shape()) +
                                " vs " + shape_str(target.shape()));
  }
  return mul_scalar(sum(smooth_l1(sub(predicted, target))), 1.0 / predicted.dim(0));
}

}  // namespace ctxnet
