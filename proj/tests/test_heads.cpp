#include <doctest.h>

#include <cmath>
#include <limits>

#include "ual/errors.hpp"
#include "ual/heads.hpp"
#include "ual/nn/ops.hpp"

using namespace ual;
using nn::Real;
using nn::Tensor;

namespace {

Tensor rand_tensor(nn::Shape shape, std::mt19937_64 &rng, double lo = 0, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Real> v(nn::numel(shape));
  for (auto &x : v)
    x = static_cast<Real>(u(rng));
  return Tensor::from(std::move(shape), std::move(v));
}

void fill(Tensor &t, Real v) {
  std::fill(t.mutable_values().begin(), t.mutable_values().end(), v);
}

double logit(double p) { return std::log(p / (1 - p)); }

} // namespace

TEST_CASE("decoder restores the input resolution") {
  std::mt19937_64 rng(1);
  nn::ParamList pl;
  auto dec = heads::make_decoder(64, pl, rng);
  auto f = rand_tensor({1, 512, 4, 4}, rng);
  auto seg = heads::decode_seg(f, dec);
  CHECK(seg.probs.height == 64);
  CHECK(seg.probs.width == 64);
  for (float v : seg.probs.values)
    CHECK((v >= 0.0F && v <= 1.0F));

  nn::ParamList small;
  auto d8 = heads::make_decoder(4, small, rng);
  for (auto [h, w] : {std::pair{2, 3}, std::pair{4, 4}, std::pair{16, 8}}) {
    auto logits = heads::decode_seg_logits(rand_tensor({2, 32, h, w}, rng), d8);
    CHECK(logits.shape() == nn::Shape{2, 1, 16 * h, 16 * w});
  }
}

TEST_CASE("square rule takes the larger extent") {
  auto raw = Tensor::parameter({1, 4}, {30, 31, 10, 24});
  auto sq = heads::square_box(raw);
  REQUIRE(sq.shape() == nn::Shape{1, 3});
  CHECK(sq.values()[2] == 24);
  nn::sum(sq).backward();
  CHECK(raw.grad()[2] == 0);
  CHECK(raw.grad()[3] == 1);
  auto tie = Tensor::parameter({1, 4}, {30, 31, 12, 12});
  nn::sum(heads::square_box(tie)).backward();
  CHECK(tie.grad()[2] == 1);
  CHECK(tie.grad()[3] == 0);
}

TEST_CASE("detection head scaling, simplex and determinism") {
  std::mt19937_64 rng(2);
  nn::ParamList pl;
  auto det = heads::make_det_head(4, pl, rng);
  // zero the last layer so every output equals its bias
  fill(det.fc2_w, 0);
  std::vector<Real> b = {0.5F, -1.0F, 2.0F, static_cast<Real>(logit(0.5)),
                         static_cast<Real>(logit(0.25)), static_cast<Real>(logit(10.0 / 64)),
                         static_cast<Real>(logit(24.0 / 48))};
  std::copy(b.begin(), b.end(), det.fc2_b.mutable_values().begin());
  auto f = rand_tensor({1, 32, 3, 4}, rng);
  auto out = heads::detect_raw(f, det, 48, 64);
  CHECK(out.box.values()[0] == doctest::Approx(32).epsilon(1e-5));
  CHECK(out.box.values()[1] == doctest::Approx(12).epsilon(1e-5));
  CHECK(out.box.values()[2] == doctest::Approx(24).epsilon(1e-5));

  auto pred = heads::detect(f, det, 48, 64);
  double s = 0;
  for (double p : pred.class_probs) {
    CHECK(p >= 0);
    s += p;
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pred.cls() == 2);
  // box clamped inside the image
  CHECK(pred.box.cy - pred.box.side / 2 >= 0);

  nn::ParamList pl2;
  std::mt19937_64 rng2(9);
  auto det2 = heads::make_det_head(4, pl2, rng2);
  auto g = rand_tensor({1, 32, 4, 4}, rng2);
  auto a = heads::detect(g, det2, 64, 64), c = heads::detect(g, det2, 64, 64);
  CHECK(a.class_probs == c.class_probs);
  CHECK(a.box == c.box);
}

TEST_CASE("non-finite logits raise") {
  std::mt19937_64 rng(3);
  nn::ParamList pl;
  auto det = heads::make_det_head(2, pl, rng);
  auto f = rand_tensor({1, 16, 2, 2}, rng);
  f.mutable_values()[0] = std::numeric_limits<Real>::quiet_NaN();
  CHECK_THROWS_AS(heads::detect_raw(f, det, 32, 32), NumericError);
}

TEST_CASE("clamp_box keeps the square inside") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-50, 150);
  for (int t = 0; t < 1000; ++t) {
    auto b = heads::clamp_box({u(rng), u(rng), u(rng)}, 48, 64);
    REQUIRE(b.side >= 1);
    REQUIRE(b.side <= 48);
    REQUIRE(b.cx - b.side / 2 >= 0);
    REQUIRE(b.cx + b.side / 2 <= 64);
    REQUIRE(b.cy - b.side / 2 >= 0);
    REQUIRE(b.cy + b.side / 2 <= 48);
  }
  BoxTuple inside{20, 20, 10};
  CHECK(heads::clamp_box(inside, 64, 64) == inside);
}
