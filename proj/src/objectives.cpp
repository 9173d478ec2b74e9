#include "ual/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "ual/errors.hpp"

namespace ual::objectives {

using nn::Real;

double clamp_prob(double p) { return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon); }

double pix_ce(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size())
    throw DimensionError("pix_ce: " + std::to_string(pred.size()) + " predictions vs " +
                         std::to_string(target.size()) + " targets");
  if (pred.empty())
    throw DimensionError("pix_ce: empty input");
  double acc = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = clamp_prob(pred[i]), t = target[i];
    acc -= t * std::log(p) + (1 - t) * std::log(1 - p);
  }
  return acc / static_cast<double>(pred.size());
}

std::vector<double> pix_ce_grad(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size())
    throw DimensionError("pix_ce_grad: size mismatch");
  std::vector<double> g(pred.size());
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < kProbEpsilon || pred[i] > 1 - kProbEpsilon)
      continue;
    const double p = pred[i], t = target[i];
    g[i] = (-t / p + (1 - t) / (1 - p)) / n;
  }
  return g;
}

double adv_loss(double score, int target_label) {
  const double s = clamp_prob(score), y = target_label;
  return -(y * std::log(s) + (1 - y) * std::log(1 - s));
}

double adv_loss_grad(double score, int target_label) {
  if (score < kProbEpsilon || score > 1 - kProbEpsilon)
    return 0.0;
  const double y = target_label;
  return -y / score + (1 - y) / (1 - score);
}

double disc_loss(double score_fake, double score_real, DiscLabels labels) {
  if (labels == DiscLabels::Printed)
    return adv_loss(score_fake, 1) + adv_loss(score_real, 0);
  return adv_loss(score_fake, 0) + adv_loss(score_real, 1);
}

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

double smooth_l1_grad(double x) {
  if (std::abs(x) < 1.0)
    return x;
  return x > 0 ? 1.0 : -1.0;
}

double box_regression(const BoxTuple &pred, const BoxTuple &target, double extent) {
  return smooth_l1((pred.cx - target.cx) / extent) + smooth_l1((pred.cy - target.cy) / extent) +
         smooth_l1((pred.side - target.side) / extent);
}

double det_loss(std::span<const double> class_probs, const BoxTuple &pred_box, int cls_target,
                const std::optional<BoxTuple> &box_target, double adv_score,
                const LossWeights &w, double extent) {
  if (cls_target < 0 || static_cast<std::size_t>(cls_target) >= class_probs.size())
    throw DataError("det_loss: class target " + std::to_string(cls_target) + " out of range");
  if (cls_target >= 1 && !box_target)
    throw DataError("det_loss: class " + std::to_string(cls_target) + " requires a box target");
  double loss = -std::log(clamp_prob(class_probs[cls_target]));
  if (cls_target >= 1)
    loss += w.lambda2 * box_regression(pred_box, *box_target, extent);
  loss += w.lambda3 * adv_loss(adv_score, 1);
  return loss;
}

double seg_loss(std::span<const double> pred, std::span<const double> target, double adv_score,
                const LossWeights &w) {
  return pix_ce(pred, target) + w.lambda1 * adv_loss(adv_score, 1);
}

namespace {

// log(sigmoid(z)) and log(1 - sigmoid(z)) with the probability clamp applied.
double log_sig(double z) {
  const double v = z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
  return std::clamp(v, std::log(kProbEpsilon), std::log1p(-kProbEpsilon));
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// BCE of sigmoid(z) against t (value clamped like the probability form)
// and the unclamped logit derivative sigmoid(z) - t.
std::pair<double, double> bce_logit(double z, double t) {
  const double value = -(t * log_sig(z) + (1 - t) * log_sig(-z));
  return {value, logistic(z) - t};
}

} // namespace

nn::Tensor bce_with_logits_mean(const nn::Tensor &logits, const nn::Tensor &targets) {
  if (logits.shape() != targets.shape())
    throw DimensionError("bce_with_logits_mean: shape mismatch " +
                         nn::shape_str(logits.shape()) + " vs " +
                         nn::shape_str(targets.shape()));
  const std::size_t n = logits.size();
  double acc = 0;
  std::vector<Real> dz(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [v, d] = bce_logit(logits.values()[i], targets.values()[i]);
    acc += v;
    dz[i] = static_cast<Real>(d / static_cast<double>(n));
  }
  nn::Node *ln = logits.node();
  return nn::make_result({1}, {static_cast<Real>(acc / static_cast<double>(n))}, {logits},
                         [ln, dz = std::move(dz)](nn::Node &self) {
                           auto &g = ln->ensure_grad();
                           for (std::size_t i = 0; i < g.size(); ++i)
                             g[i] += self.grad[0] * dz[i];
                         });
}

nn::Tensor softmax_cross_entropy(const nn::Tensor &logits, const std::vector<int> &labels) {
  if (logits.rank() != 2 || static_cast<std::size_t>(logits.dim(0)) != labels.size())
    throw DimensionError("softmax_cross_entropy: logits " + nn::shape_str(logits.shape()) +
                         " vs " + std::to_string(labels.size()) + " labels");
  const int N = logits.dim(0), K = logits.dim(1);
  std::vector<Real> dz(static_cast<std::size_t>(N) * K);
  double acc = 0;
  for (int n = 0; n < N; ++n) {
    const Real *z = logits.values().data() + static_cast<std::size_t>(n) * K;
    const double zmax = *std::max_element(z, z + K);
    double denom = 0;
    for (int k = 0; k < K; ++k)
      denom += std::exp(z[k] - zmax);
    const int y = labels[n];
    if (y < 0 || y >= K)
      throw DataError("softmax_cross_entropy: label " + std::to_string(y) + " out of range");
    const double logp = z[y] - zmax - std::log(denom);
    acc -= std::max(logp, std::log(kProbEpsilon));
    for (int k = 0; k < K; ++k) {
      const double p = std::exp(z[k] - zmax) / denom;
      dz[static_cast<std::size_t>(n) * K + k] = static_cast<Real>((p - (k == y ? 1.0 : 0.0)) / N);
    }
  }
  nn::Node *ln = logits.node();
  return nn::make_result({1}, {static_cast<Real>(acc / N)}, {logits},
                         [ln, dz = std::move(dz)](nn::Node &self) {
                           auto &g = ln->ensure_grad();
                           for (std::size_t i = 0; i < g.size(); ++i)
                             g[i] += self.grad[0] * dz[i];
                         });
}

nn::Tensor adv_loss_logits(const nn::Tensor &logits, int label, const std::vector<double> &weights) {
  if (logits.size() != weights.size())
    throw DimensionError("adv_loss_logits: " + std::to_string(logits.size()) + " logits vs " +
                         std::to_string(weights.size()) + " weights");
  double wsum = 0;
  for (double w : weights)
    wsum += w;
  std::vector<Real> dz(logits.size(), Real(0));
  double acc = 0;
  if (wsum > 0)
    for (std::size_t i = 0; i < logits.size(); ++i) {
      if (weights[i] == 0)
        continue;
      auto [v, d] = bce_logit(logits.values()[i], label);
      acc += weights[i] * v;
      dz[i] = static_cast<Real>(weights[i] * d / wsum);
    }
  const double value = wsum > 0 ? acc / wsum : 0.0;
  nn::Node *ln = logits.node();
  return nn::make_result({1}, {static_cast<Real>(value)}, {logits},
                         [ln, dz = std::move(dz)](nn::Node &self) {
                           auto &g = ln->ensure_grad();
                           for (std::size_t i = 0; i < g.size(); ++i)
                             g[i] += self.grad[0] * dz[i];
                         });
}

nn::Tensor smooth_l1_loss(const nn::Tensor &pred, const std::vector<double> &target,
                          const std::vector<double> &weights) {
  if (pred.rank() != 2 || pred.size() != target.size() ||
      static_cast<std::size_t>(pred.dim(0)) != weights.size())
    throw DimensionError("smooth_l1_loss: pred " + nn::shape_str(pred.shape()) + " vs " +
                         std::to_string(target.size()) + " targets");
  const int N = pred.dim(0), D = pred.dim(1);
  double wsum = 0;
  for (double w : weights)
    wsum += w;
  std::vector<Real> dz(pred.size(), Real(0));
  double acc = 0;
  if (wsum > 0)
    for (int n = 0; n < N; ++n)
      for (int d = 0; d < D; ++d) {
        const std::size_t i = static_cast<std::size_t>(n) * D + d;
        const double x = pred.values()[i] - target[i];
        acc += weights[n] * smooth_l1(x);
        dz[i] = static_cast<Real>(weights[n] * smooth_l1_grad(x) / wsum);
      }
  nn::Node *pn = pred.node();
  return nn::make_result({1}, {static_cast<Real>(wsum > 0 ? acc / wsum : 0.0)}, {pred},
                         [pn, dz = std::move(dz)](nn::Node &self) {
                           auto &g = pn->ensure_grad();
                           for (std::size_t i = 0; i < g.size(); ++i)
                             g[i] += self.grad[0] * dz[i];
                         });
}

} // namespace ual::objectives
