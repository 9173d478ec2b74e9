#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ual/grid.hpp"
#include "ual/nn/tensor.hpp"

namespace ual::objectives {

inline constexpr double kProbEpsilon = 1e-7;

struct LossWeights {
  double lambda1 = 1.0; // segmentation adversarial
  double lambda2 = 1.0; // box regression
  double lambda3 = 1.0; // detection adversarial
};

/// Label convention of the discriminator loss.
enum class DiscLabels {
  Conventional, // real -> 1, fake -> 0
  Printed,      // fake -> 1, real -> 0
};

double clamp_prob(double p);

/// Mean per-pixel binary cross-entropy, probabilities clamped to [eps, 1-eps].
double pix_ce(std::span<const double> pred, std::span<const double> target);
/// d pix_ce / d pred; zero where the clamp is active.
std::vector<double> pix_ce_grad(std::span<const double> pred, std::span<const double> target);

/// -[y log s + (1-y) log(1-s)], s clamped.
double adv_loss(double score, int target_label);
double adv_loss_grad(double score, int target_label);

double disc_loss(double score_fake, double score_real,
                 DiscLabels labels = DiscLabels::Conventional);

double smooth_l1(double x);
double smooth_l1_grad(double x);

/// Regression term over (cx, cy, side), both boxes divided by `extent`.
double box_regression(const BoxTuple &pred, const BoxTuple &target, double extent);

/// -log p[cls] + lambda2 [cls>=1] reg + lambda3 adv(score, 1).
/// Throws DataError when cls >= 1 and the target box is missing.
double det_loss(std::span<const double> class_probs, const BoxTuple &pred_box, int cls_target,
                const std::optional<BoxTuple> &box_target, double adv_score,
                const LossWeights &w, double extent);

double seg_loss(std::span<const double> pred, std::span<const double> target, double adv_score,
                const LossWeights &w);

// Graph versions used in training. Each takes raw logits and equals the
// probability-space formula above (up to the epsilon clamp).

/// Mean BCE of sigmoid(logits) against targets of equal shape.
nn::Tensor bce_with_logits_mean(const nn::Tensor &logits, const nn::Tensor &targets);

/// Mean over samples of -log softmax(logits)[label]; logits [N,K].
nn::Tensor softmax_cross_entropy(const nn::Tensor &logits, const std::vector<int> &labels);

/// Weighted mean over samples of adv_loss(sigmoid(logit_n), label);
/// logits [N,1]. Zero when all weights are zero.
nn::Tensor adv_loss_logits(const nn::Tensor &logits, int label, const std::vector<double> &weights);

/// Weighted mean over samples of sum_i smooth_l1(pred_i - target_i);
/// pred [N,D], target row-major N*D.
nn::Tensor smooth_l1_loss(const nn::Tensor &pred, const std::vector<double> &target,
                          const std::vector<double> &weights);

} // namespace ual::objectives
