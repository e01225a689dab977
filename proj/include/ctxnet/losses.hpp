#pragma once

#include "ctxnet/geometry.hpp"
#include "ctxnet/tensor.hpp"

#include <span>
#include <string>

namespace ctxnet {

/// How raw label-head outputs become the probabilities fed to the log terms.
/// kSquash: q = logistic(score). kLiteral: q = sigma * confidence, with the
/// fixed weighting factor applied to a confidence already in (0,1).
enum class SigmaMode { kSquash, kLiteral };

std::string to_string(SigmaMode mode);
SigmaMode sigma_mode_from_string(const std::string& s);

struct LossConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double sigma_factor = 0.5;
  SigmaMode sigma_mode = SigmaMode::kSquash;
};

/// Probabilities are clamped to [kProbEpsilon, 1 - kProbEpsilon] before any log.
inline constexpr double kProbEpsilon = 1e-7;

struct LossBreakdown {
  double l_r = 0, l_p = 0, l_l_object = 0, l_l_context = 0, total = 0;
};

// Scalar forms.

/// 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise.
double smooth_l1(double x);
/// Sum of smooth_l1 over the four delta components.
double location_loss(const BoxDelta& predicted, const BoxDelta& target);
/// Binary cross-entropy of an existence confidence against p* in {0,1}.
double patch_loss(double p_hat, int p_star);
/// Negated multi-label log-likelihood summed over categories. `scores` are raw
/// head outputs in squash mode, confidences in [0,1] in literal mode.
double label_loss(std::span<const double> scores, std::span<const int> labels, const LossConfig& config);
/// total = l_r + alpha*l_p + beta*l_l_object + gamma*l_l_context.
LossBreakdown total_loss(double l_r, double l_p, double l_l_object, double l_l_context, const LossConfig& config);

// Graph forms used in training.

/// Sum over elements of -[y ln q + (1-y) ln(1-q)], q clamped.
Tensor binary_cross_entropy(const Tensor& q, const Tensor& targets);
/// Per-element label probability from raw head outputs, per `config.sigma_mode`.
Tensor label_probability(const Tensor& raw, const LossConfig& config);
/// Mean over rows of the summed smooth-L1 difference. pred, target: (P,4).
Tensor location_loss(const Tensor& predicted, const Tensor& target);

}  // namespace ctxnet
