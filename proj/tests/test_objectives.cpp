#include <doctest.h>

#include <cmath>
#include <functional>

#include "ual/errors.hpp"
#include "ual/objectives.hpp"

using namespace ual;
using namespace ual::objectives;

namespace {

constexpr double kEps = kProbEpsilon;
const double kLn2 = std::log(2.0);

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

double central(const std::function<double(double)> &f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

} // namespace

TEST_CASE("pix_ce examples") {
  std::vector<double> t = {0, 1, 1, 0};
  std::vector<double> exact = {0, 1, 1, 0};
  CHECK(pix_ce(exact, t) <= 1e-6);
  std::vector<double> half(4, 0.5);
  CHECK(std::abs(pix_ce(half, t) - kLn2) < 1e-12);

  // four-term hand sum
  std::vector<double> p = {0.2, 0.7, 0.9, 0.35};
  const double hand =
      -(std::log(1 - 0.2) + std::log(0.7) + std::log(0.9) + std::log(1 - 0.35)) / 4.0;
  CHECK(std::abs(pix_ce(p, t) - hand) < 1e-9);

  std::vector<double> soft_t = {0.25, 0.5, 1, 0};
  const double hand2 = -((0.25 * std::log(0.2) + 0.75 * std::log(0.8)) +
                         (0.5 * std::log(0.7) + 0.5 * std::log(0.3)) + std::log(0.9) +
                         std::log(0.65)) /
                       4.0;
  CHECK(std::abs(pix_ce(p, soft_t) - hand2) < 1e-9);

  CHECK_THROWS_AS(pix_ce(p, std::vector<double>{0, 1}), DimensionError);
}

TEST_CASE("adversarial and discriminator losses") {
  CHECK(adv_loss(1 - kEps, 1) < 1e-6);
  CHECK(std::abs(adv_loss(0.5, 1) - kLn2) < 1e-12);
  CHECK(std::abs(adv_loss(0.5, 0) - kLn2) < 1e-12);
  CHECK(std::abs(adv_loss(0.3, 1) + std::log(0.3)) < 1e-12);
  CHECK(std::abs(adv_loss(0.3, 0) + std::log(0.7)) < 1e-12);

  const double big = 2 * std::log(1 / kEps);
  CHECK(std::abs(disc_loss(kEps, 1 - kEps, DiscLabels::Printed) - big) < 1e-6);
  CHECK(disc_loss(1 - kEps, kEps, DiscLabels::Printed) < 1e-6);
  CHECK(std::abs(disc_loss(0.5, 0.5, DiscLabels::Printed) - 2 * kLn2) < 1e-12);
  CHECK(std::abs(disc_loss(0.5, 0.5) - 2 * kLn2) < 1e-12);
  // conventional orientation mirrors the printed one
  CHECK(disc_loss(kEps, 1 - kEps) < 1e-6);
  CHECK(std::abs(disc_loss(1 - kEps, kEps) - big) < 1e-6);
  CHECK(std::abs(disc_loss(0.2, 0.9) - (-std::log(0.8) - std::log(0.9))) < 1e-12);
}

TEST_CASE("smooth l1") {
  CHECK(smooth_l1(0) == 0.0);
  CHECK(smooth_l1(0.5) == 0.125);
  CHECK(smooth_l1(2) == 1.5);
  CHECK(smooth_l1(-2) == 1.5);
  // C1 at |x| = 1: both pieces meet with value 0.5 and slope +-1
  for (double s : {1.0, -1.0}) {
    const double lo = s * (1 - 1e-9), hi = s * (1 + 1e-9);
    CHECK(std::abs(smooth_l1(lo) - 0.5) < 1e-8);
    CHECK(std::abs(smooth_l1(hi) - 0.5) < 1e-8);
    CHECK(std::abs(smooth_l1_grad(lo) - s) < 1e-8);
    CHECK(std::abs(smooth_l1_grad(hi) - s) < 1e-8);
    CHECK(std::abs(central(smooth_l1, s, 1e-6) - s) < 1e-6);
  }
}

TEST_CASE("detection loss") {
  LossWeights w;
  std::vector<double> probs = {0.6, 0.3, 0.1};
  BoxTuple far{5, 60, 3};
  CHECK(std::abs(det_loss(probs, far, 0, std::nullopt, 0.5, w, 64) -
                 (-std::log(0.6) + kLn2)) < 1e-12);
  std::vector<double> sure = {0, 1, 0};
  BoxTuple b{30, 31, 12};
  CHECK(det_loss(sure, b, 1, b, 1 - kEps, w, 64) <= 1e-6);

  // hand sum with every term active
  BoxTuple t{30, 30, 20};
  BoxTuple p{94, 36.4, 20};
  const double reg = (64.0 / 64 - 0.5) + 0.5 * (6.4 / 64) * (6.4 / 64) + 0.0;
  LossWeights w2{1.0, 0.5, 2.0};
  const double hand = -std::log(0.3) + 0.5 * reg - 2.0 * std::log(0.8);
  CHECK(std::abs(box_regression(p, t, 64) - reg) < 1e-12);
  CHECK(std::abs(det_loss(probs, p, 1, t, 0.8, w2, 64) - hand) < 1e-9);

  CHECK_THROWS_AS(det_loss(probs, p, 2, std::nullopt, 0.5, w, 64), DataError);
  CHECK_THROWS_AS(det_loss(probs, p, 3, t, 0.5, w, 64), DataError);
}

TEST_CASE("segmentation loss") {
  std::vector<double> p = {0.2, 0.7, 0.9, 0.35}, t = {0, 1, 1, 0};
  LossWeights none{0.0, 1.0, 1.0};
  CHECK(seg_loss(p, t, 0.1, none) == pix_ce(p, t));
  LossWeights w{0.7, 1.0, 1.0};
  CHECK(std::abs(seg_loss(p, t, 0.4, w) - (pix_ce(p, t) - 0.7 * std::log(0.4))) < 1e-12);
  CHECK(seg_loss(t, t, 1 - kEps, w) < 1e-6);
}

TEST_CASE("losses are nonnegative and finite for extreme inputs") {
  for (double s : {-1.0, 0.0, 1e-300, 0.5, 1.0, 2.0})
    for (int y : {0, 1}) {
      const double v = adv_loss(s, y);
      CHECK(std::isfinite(v));
      CHECK(v >= 0);
    }
  std::vector<double> p = {0, 1, 1e-20, 1 - 1e-20}, t = {1, 0, 1, 0};
  CHECK(std::isfinite(pix_ce(p, t)));
  CHECK(pix_ce(p, t) >= 0);
}

TEST_CASE("analytic loss gradients match central differences") {
  const double h = 1e-6;
  SUBCASE("pix_ce") {
    std::vector<double> p = {0.2, 0.7, 0.9, 0.35, 0.51}, t = {0, 1, 0.4, 0, 1};
    auto g = pix_ce_grad(p, t);
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto f = [&](double x) {
        auto q = p;
        q[i] = x;
        return pix_ce(q, t);
      };
      CHECK(rel_err(g[i], central(f, p[i], h)) < 1e-3);
    }
    // inside the clamp the loss is flat and the gradient is zero
    std::vector<double> edge = {1e-9}, one = {1};
    CHECK(pix_ce_grad(edge, one)[0] == 0.0);
  }
  SUBCASE("adv_loss") {
    for (double s : {0.05, 0.3, 0.5, 0.93})
      for (int y : {0, 1}) {
        auto f = [&](double x) { return adv_loss(x, y); };
        CHECK(rel_err(adv_loss_grad(s, y), central(f, s, h)) < 1e-3);
      }
    CHECK(adv_loss_grad(1 - 1e-9, 1) == 0.0);
  }
  SUBCASE("smooth_l1 composite") {
    BoxTuple t{30, 30, 20};
    for (BoxTuple p : {BoxTuple{33, 28, 21}, BoxTuple{100, 10, 90}, BoxTuple{-40, 31, 19.5}}) {
      const double ext = 64;
      const double pc[3] = {p.cx, p.cy, p.side}, tc[3] = {t.cx, t.cy, t.side};
      for (int k = 0; k < 3; ++k) {
        auto f = [&](double x) {
          BoxTuple q = p;
          (k == 0 ? q.cx : k == 1 ? q.cy : q.side) = x;
          return box_regression(q, t, ext);
        };
        const double analytic = smooth_l1_grad((pc[k] - tc[k]) / ext) / ext;
        CHECK(rel_err(analytic, central(f, pc[k], 1e-4)) < 1e-3);
      }
    }
  }
}

TEST_CASE("fused logit losses equal the probability formulas") {
  auto sig = [](double z) { return 1 / (1 + std::exp(-z)); };
  std::vector<nn::Real> z = {-2.0F, 0.3F, 1.7F, -0.4F};
  std::vector<double> t = {0, 1, 1, 0};
  auto logits = nn::Tensor::from({1, 1, 2, 2}, z);
  auto targets = nn::Tensor::from({1, 1, 2, 2}, {0, 1, 1, 0});
  std::vector<double> p;
  for (auto v : z)
    p.push_back(sig(v));
  CHECK(bce_with_logits_mean(logits, targets).item() == doctest::Approx(pix_ce(p, t)).epsilon(1e-6));

  auto lg = nn::Tensor::from({2, 1}, {0.8F, -1.1F});
  const double expect = (2.0 * adv_loss(sig(0.8), 1) + 1.0 * adv_loss(sig(-1.1), 1)) / 3.0;
  CHECK(adv_loss_logits(lg, 1, {2.0, 1.0}).item() == doctest::Approx(expect).epsilon(1e-6));
  CHECK(adv_loss_logits(lg, 1, {0.0, 0.0}).item() == 0.0);

  auto cl = nn::Tensor::from({2, 3}, {0.1F, 1.0F, -0.5F, 2.0F, 0.0F, 0.3F});
  auto sm = [](double a, double b, double c, int k) {
    const double v[3] = {a, b, c};
    return std::exp(v[k]) / (std::exp(a) + std::exp(b) + std::exp(c));
  };
  const double ce = -(std::log(sm(0.1, 1.0, -0.5, 1)) + std::log(sm(2.0, 0.0, 0.3, 2))) / 2;
  CHECK(softmax_cross_entropy(cl, {1, 2}).item() == doctest::Approx(ce).epsilon(1e-6));

  auto bp = nn::Tensor::from({2, 3}, {0.5F, 0.4F, 0.2F, 0.0F, 0.0F, 0.0F});
  const double l1 = smooth_l1(0.5 - 0.25) + smooth_l1(0.4 - 0.4) + smooth_l1(0.2 - 1.6);
  CHECK(smooth_l1_loss(bp, {0.25, 0.4, 1.6, 9, 9, 9}, {1.0, 0.0}).item() ==
        doctest::Approx(l1).epsilon(1e-6));
}
