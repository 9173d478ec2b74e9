// Central finite differences against the reverse-mode gradients, double precision.
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "ual/cswp.hpp"
#include "ual/heads.hpp"
#include "ual/network.hpp"
#include "ual/nn/ops.hpp"
#include "ual/objectives.hpp"

using namespace ual;
using nn::Real;
using nn::Tensor;

static_assert(sizeof(Real) == sizeof(double), "gradient tests need the double build");

namespace {

Tensor rand_param(nn::Shape shape, std::mt19937_64 &rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Real> v(nn::numel(shape));
  for (auto &x : v)
    x = u(rng);
  return Tensor::parameter(std::move(shape), std::move(v));
}

// fixed random projection so every output element matters
Tensor project(const Tensor &y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Real> w(y.size());
  for (auto &x : w)
    x = u(rng);
  return nn::sum(nn::mul(y, Tensor::from(y.shape(), std::move(w))));
}

double rel_err(double a, double b) {
  const double d = std::abs(a - b);
  return d / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Checks `count` random entries (all when count <= 0) of each input.
double worst_error(const std::function<Tensor()> &loss, std::vector<Tensor> inputs, int count,
                   std::mt19937_64 &rng, double h = 1e-6) {
  for (auto &t : inputs)
    t.zero_grad();
  loss().backward();
  double worst = 0;
  for (auto &t : inputs) {
    std::vector<std::size_t> idx;
    if (count <= 0 || static_cast<std::size_t>(count) >= t.size()) {
      for (std::size_t i = 0; i < t.size(); ++i)
        idx.push_back(i);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, t.size() - 1);
      for (int k = 0; k < count; ++k)
        idx.push_back(pick(rng));
    }
    const std::vector<Real> analytic(t.grad().begin(), t.grad().end());
    for (std::size_t i : idx) {
      const Real keep = t.values()[i];
      t.mutable_values()[i] = keep + h;
      const double up = loss().item();
      t.mutable_values()[i] = keep - h;
      const double down = loss().item();
      t.mutable_values()[i] = keep;
      const double fd = (up - down) / (2 * h);
      const double an = analytic.empty() ? 0.0 : analytic[i];
      // entries with both sides tiny carry no signal
      if (std::abs(fd) < 1e-9 && std::abs(an) < 1e-9)
        continue;
      worst = std::max(worst, rel_err(an, fd));
    }
  }
  return worst;
}

} // namespace

TEST_CASE("elementwise and reduction ops") {
  std::mt19937_64 rng(1);
  auto a = rand_param({2, 3, 4}, rng), b = rand_param({2, 3, 4}, rng);
  CHECK(worst_error([&] { return project(nn::mul(nn::add(a, b), nn::sub(a, b)), 1); }, {a, b}, 0,
                    rng) < 1e-6);
  CHECK(worst_error([&] { return project(nn::tanh(nn::scale(a, 1.7)), 2); }, {a}, 0, rng) < 1e-6);
  CHECK(worst_error([&] { return project(nn::sigmoid(a), 3); }, {a}, 0, rng) < 1e-6);
  CHECK(worst_error([&] { return nn::mean(nn::mul(a, a)); }, {a}, 0, rng) < 1e-6);
}

TEST_CASE("convolution, pooling and resize ops") {
  std::mt19937_64 rng(2);
  auto x = rand_param({2, 3, 6, 6}, rng);
  auto w = rand_param({4, 3, 3, 3}, rng), b = rand_param({4}, rng);
  CHECK(worst_error([&] { return project(nn::conv2d(x, w, b, 1), 4); }, {x, w, b}, 0, rng) <
        1e-6);
  auto wt = rand_param({3, 2, 3, 3}, rng), bt = rand_param({2}, rng);
  CHECK(worst_error([&] { return project(nn::conv_transpose2d(x, wt, bt, 2, 1, 1), 5); },
                    {x, wt, bt}, 0, rng) < 1e-6);
  CHECK(worst_error([&] { return project(nn::max_pool2(x), 6); }, {x}, 0, rng) < 1e-6);
  CHECK(worst_error([&] { return project(nn::global_avg_pool(x), 7); }, {x}, 0, rng) < 1e-6);
  CHECK(worst_error([&] { return project(nn::resize_bilinear(x, 5, 9), 8); }, {x}, 0, rng) <
        1e-6);
  auto f = rand_param({3, 5}, rng), lw = rand_param({2, 5}, rng), lb = rand_param({2}, rng);
  CHECK(worst_error([&] { return project(nn::relu(nn::linear(f, lw, lb)), 9); }, {f, lw, lb}, 0,
                    rng) < 1e-6);
  auto y = rand_param({2, 2, 6, 6}, rng);
  CHECK(worst_error(
            [&] {
              auto c = nn::concat({x, y});
              return project(nn::reshape(nn::slice(c, 1, 4), {2, 18, 6}), 10);
            },
            {x, y}, 0, rng) < 1e-6);
}

TEST_CASE("fused losses and the square rule") {
  std::mt19937_64 rng(3);
  auto z = rand_param({2, 1, 3, 3}, rng, -3, 3);
  auto t = Tensor::from({2, 1, 3, 3}, std::vector<Real>(18, 0.25));
  CHECK(worst_error([&] { return objectives::bce_with_logits_mean(z, t); }, {z}, 0, rng) < 1e-6);
  auto cl = rand_param({3, 3}, rng, -2, 2);
  CHECK(worst_error([&] { return objectives::softmax_cross_entropy(cl, {0, 2, 1}); }, {cl}, 0,
                    rng) < 1e-6);
  auto d = rand_param({3, 1}, rng, -2, 2);
  CHECK(worst_error([&] { return objectives::adv_loss_logits(d, 1, {1.0, 0.0, 2.0}); }, {d}, 0,
                    rng) < 1e-6);
  auto bp = rand_param({2, 3}, rng, -2, 2);
  CHECK(worst_error(
            [&] {
              return objectives::smooth_l1_loss(bp, {0.1, 1.5, -2.9, 0.2, 0.3, 0.4}, {1.0, 0.5});
            },
            {bp}, 0, rng) < 1e-6);
  auto raw = Tensor::parameter({2, 4}, {10, 20, 5, 9, 30, 31, 14, 11});
  CHECK(worst_error([&] { return project(heads::square_box(raw), 11); }, {raw}, 0, rng) < 1e-6);
}

TEST_CASE("soft window gradients with respect to the box and the probabilities") {
  std::mt19937_64 rng(4);
  // smooth blob so the canvas is a smooth function of the box
  std::vector<Real> pv(40 * 40);
  for (int r = 0; r < 40; ++r)
    for (int c = 0; c < 40; ++c)
      pv[r * 40 + c] = std::exp(-((r - 18.0) * (r - 18.0) + (c - 22.0) * (c - 22.0)) / 40.0);
  auto probs = Tensor::parameter({1, 1, 40, 40}, pv);
  for (double sharp : {1.0, 4.0}) {
    // fractional centres keep the bilinear stencil away from its kinks
    auto box = Tensor::parameter({1, 3}, {21.3, 17.6, 13.4});
    const cswp::SoftOptions opt{cswp::WindowMode::Soft, sharp};
    auto loss = [&] { return project(cswp::integrate_soft(probs, box, opt), 12); };
    CHECK(worst_error(loss, {box}, 0, rng, 1e-5) < 1e-2);
    // the canvas is linear in the probabilities, so a large step is exact
    CHECK(worst_error(loss, {probs}, 60, rng, 0.25) < 1e-5);
  }
}

TEST_CASE("encoder gradients on random parameters") {
  CorpusSpec spec;
  spec.count = 2;
  spec.height = spec.width = 32;
  spec.class_mix = {0, 0.5, 0.5};
  auto corpus = generate_corpus(spec);
  ModelConfig cfg;
  cfg.base_channels = 2;
  auto net = make_network(cfg, 5);
  auto a = prepare_input(corpus[0], cfg), b = prepare_input(corpus[1], cfg);
  auto in = batch_input({&a, &b});
  auto loss = [&] {
    auto stacks = encoder::encode(net.enc, in.images, in.pyramids);
    return project(nn::concat(stacks), 13);
  };
  std::vector<Tensor> enc_params;
  for (const auto &p : net.theta_seg.items())
    if (p.name.rfind("enc/", 0) == 0)
      enc_params.push_back(p.tensor);
  REQUIRE(enc_params.size() == 36);
  std::mt19937_64 rng(6);
  // 2 random entries per tensor: 72 parameters in total
  CHECK(worst_error(loss, enc_params, 2, rng) < 1e-2);
}

TEST_CASE("end-to-end generator gradients at tiny scale") {
  CorpusSpec spec;
  spec.count = 2;
  spec.height = spec.width = 32;
  spec.class_mix = {0, 0.5, 0.5};
  auto corpus = generate_corpus(spec);
  ModelConfig cfg;
  cfg.base_channels = 2;
  auto net = make_network(cfg, 8);
  // zero-initialised biases put dead units exactly on the ReLU kink
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  for (auto *group : {&net.theta_seg, &net.theta_dec})
    for (auto &p : group->items())
      if (p.name.ends_with("/b"))
        for (auto &v : p.tensor.mutable_values())
          v = jitter(rng);
  auto a = prepare_input(corpus[0], cfg), b = prepare_input(corpus[1], cfg);
  auto in = batch_input({&a, &b});
  auto loss = [&] {
    auto f = forward(net, in);
    return nn::add(project(f.seg_logits, 14),
                   nn::add(project(f.det.class_logits, 15), project(f.det.box, 16)));
  };
  std::vector<Tensor> ps;
  for (const auto &p : net.theta_seg.items())
    if (p.name.rfind("enc/", 0) != 0)
      ps.push_back(p.tensor);
  for (const auto &p : net.theta_dec.items())
    ps.push_back(p.tensor);
  CHECK(worst_error(loss, ps, 3, rng) < 1e-2);
}
