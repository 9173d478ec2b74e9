// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ual/cli.hpp"
#include "ual/cswp.hpp"
#include "ual/edfpm.hpp"
#include "ual/fsc.hpp"
#include "ual/metrics.hpp"
#include "ual/nn/ops.hpp"
#include "ual/objectives.hpp"
#include "ual/pipeline.hpp"
#include "ual/radiomics.hpp"
#include "ual/trainer.hpp"

using namespace ual;
namespace fs = std::filesystem;
using nn::Real;
using nn::Tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double time_limit_s; // 0: untimed
  std::function<Outcome()> run;
};

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path scratch(const std::string &tag) {
  auto dir = fs::temp_directory_path() / ("ual_accept_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> tree(const fs::path &root) {
  std::map<std::string, std::string> files;
  for (const auto &e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file())
      files[fs::relative(e.path(), root).string()] = slurp(e.path());
  return files;
}

int ual_run(std::vector<std::string> args) {
  args.insert(args.begin(), "ual");
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

Grid random_grid(int h, int w, std::mt19937_64 &rng, double lo = 0, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Grid g(h, w);
  for (auto &v : g.values)
    v = static_cast<float>(u(rng));
  return g;
}

Grid random_mask(int h, int w, std::mt19937_64 &rng, double p) {
  std::bernoulli_distribution b(p);
  Grid g(h, w);
  for (auto &v : g.values)
    v = b(rng) ? 1.0F : 0.0F;
  return g;
}

// ---------------------------------------------------------------- oracles

double sobel_error(std::mt19937_64 &rng) {
  const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  auto reflect = [](int i, int n) { return i < 0 ? -i : (i >= n ? 2 * n - 2 - i : i); };
  double worst = 0;
  for (int t = 0; t < 20; ++t) {
    auto img = random_grid(13 + t % 5, 17 + t % 3, rng);
    auto got = edfpm::sobel_edges(img);
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c) {
        double gx = 0, gy = 0;
        for (int i = -1; i <= 1; ++i)
          for (int j = -1; j <= 1; ++j) {
            const double v = img.at(reflect(r + i, img.height), reflect(c + j, img.width));
            gx += kx[i + 1][j + 1] * v;
            gy += kx[j + 1][i + 1] * v;
          }
        worst = std::max(worst, std::abs(std::hypot(gx, gy) - got.at(r, c)));
      }
  }
  return worst;
}

Tensor rand_tensor(nn::Shape shape, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Real> v(nn::numel(shape));
  for (auto &x : v)
    x = static_cast<Real>(u(rng));
  return Tensor::from(std::move(shape), std::move(v));
}

double fsc_error(std::mt19937_64 &rng) {
  double worst = 0;
  for (int C : {1, 2, 4}) {
    fsc::FscParams p{rand_tensor({C, 3 * C, 1, 1}, rng), rand_tensor({C}, rng),
                     rand_tensor({C, C, 1, 1}, rng),     rand_tensor({C}, rng),
                     rand_tensor({C, 2 * C, 1, 1}, rng), rand_tensor({C}, rng),
                     rand_tensor({C, 2 * C, 1, 1}, rng), rand_tensor({C}, rng)};
    const Tensor in[3] = {rand_tensor({1, C, 3, 3}, rng), rand_tensor({1, C, 3, 3}, rng),
                          rand_tensor({1, C, 3, 3}, rng)};
    auto out = fsc::fuse(in[0], in[1], in[2], p);
    const int hw = 9;
    auto w = [](const Tensor &t, int o, int i) { return double(t.values()[o * t.dim(1) + i]); };
    auto x = [&](int m, int c, int i) { return double(in[m].values()[c * hw + i]); };
    for (int i = 0; i < hw; ++i) {
      std::vector<double> h(C), a(C);
      for (int o = 0; o < C; ++o) {
        double s = p.b_a.values()[o];
        for (int m = 0; m < 3; ++m)
          for (int c = 0; c < C; ++c)
            s += w(p.w_a, o, m * C + c) * x(m, c, i);
        h[o] = std::max(0.0, s);
      }
      for (int o = 0; o < C; ++o) {
        double s = p.b_b.values()[o];
        for (int c = 0; c < C; ++c)
          s += w(p.w_b, o, c) * h[c];
        a[o] = std::tanh(s);
      }
      for (int o = 0; o < C; ++o) {
        double s = p.b_c.values()[o], q = p.b_d.values()[o];
        for (int c = 0; c < C; ++c) {
          s += w(p.w_c, o, c) * a[c] + w(p.w_c, o, C + c) * x(0, c, i);
          q += w(p.w_d, o, c) * a[c] + w(p.w_d, o, C + c) * x(2, c, i);
        }
        worst = std::max({worst, std::abs(a[o] - out.f_a.values()[o * hw + i]),
                          std::abs(std::max(0.0, s) - out.f_seg.values()[o * hw + i]),
                          std::abs(std::max(0.0, q) - out.f_dec.values()[o * hw + i])});
      }
    }
  }
  return worst;
}

// largest |normalised entry * 2 * pairs - enumerated count|
double glcm_error(std::mt19937_64 &rng) {
  double worst = 0;
  const int levels = 8;
  for (int t = 0; t < 20; ++t) {
    auto img = random_grid(12, 15, rng);
    auto mask = random_mask(12, 15, rng, 0.7);
    double lo = 1e9, hi = -1e9;
    for (std::size_t i = 0; i < img.size(); ++i)
      if (mask.values[i] > 0) {
        lo = std::min<double>(lo, img.values[i]);
        hi = std::max<double>(hi, img.values[i]);
      }
    auto level = [&](float v) {
      const int q = static_cast<int>((v - lo) / (hi - lo) * levels);
      return std::clamp(q, 0, levels - 1);
    };
    for (radiomics::Offset off : {radiomics::Offset{1, 0}, {0, 1}, {1, 1}, {-1, 1}}) {
      std::vector<double> counts(levels * levels, 0.0);
      double pairs = 0;
      for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
          const int r2 = r + off.dy, c2 = c + off.dx;
          if (r2 < 0 || r2 >= img.height || c2 < 0 || c2 >= img.width)
            continue;
          if (mask.at(r, c) == 0 || mask.at(r2, c2) == 0)
            continue;
          const int i = level(img.at(r, c)), j = level(img.at(r2, c2));
          counts[i * levels + j] += 1;
          counts[j * levels + i] += 1;
          pairs += 1;
        }
      auto p = radiomics::glcm_matrix(img, mask, levels, off);
      for (std::size_t k = 0; k < p.size(); ++k)
        worst = std::max(worst, std::abs(p[k] * 2 * pairs - counts[k]));
    }
  }
  return worst;
}

double loss_error() {
  using namespace objectives;
  double worst = 0;
  auto note = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  const std::vector<double> pred{0.9, 0.2, 0.6, 0.5}, tgt{1, 0, 0, 1};
  note(pix_ce(pred, tgt),
       -(std::log(0.9) + std::log(0.8) + std::log(0.4) + std::log(0.5)) / 4.0);
  note(pix_ce(std::vector<double>{0.0}, std::vector<double>{1.0}), -std::log(kProbEpsilon));
  note(adv_loss(0.7, 1), -std::log(0.7));
  note(adv_loss(0.7, 0), -std::log(0.3));
  note(disc_loss(0.3, 0.8), -std::log(0.7) - std::log(0.8));
  note(disc_loss(0.3, 0.8, DiscLabels::Printed), -std::log(0.3) - std::log(0.2));
  note(smooth_l1(0.5), 0.125);
  note(smooth_l1(-3.0), 2.5);
  const BoxTuple p{94, 36.4, 20}, t{30, 30, 20};
  // x: 64/64 = 1 -> 0.5; y: 6.4/64 = 0.1 -> 0.005; side 0
  note(box_regression(p, t, 64), 0.5 + 0.005);
  const LossWeights w{1.0, 0.5, 2.0};
  const std::vector<double> probs{0.1, 0.7, 0.2};
  note(det_loss(probs, p, 1, t, 0.4, w, 64), -std::log(0.7) + 0.5 * 0.505 - 2.0 * std::log(0.4));
  note(det_loss(probs, p, 0, std::nullopt, 0.4, w, 64), -std::log(0.1) - 2.0 * std::log(0.4));
  note(seg_loss(pred, tgt, 0.25, w), pix_ce(pred, tgt) - std::log(0.25));
  return worst;
}

double metrics_error(std::mt19937_64 &rng) {
  double worst = 0;
  auto note = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  std::uniform_real_distribution<double> pos(5, 40), side(1, 20);
  for (int t = 0; t < 200; ++t) {
    auto a = random_mask(16, 16, rng, 0.4), b = random_mask(16, 16, rng, 0.4);
    double inter = 0, sa = 0, sb = 0, agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      inter += a.values[i] * b.values[i];
      sa += a.values[i];
      sb += b.values[i];
      agree += a.values[i] == b.values[i];
    }
    note(metrics::dsc(a, b), 100.0 * 2 * inter / (sa + sb));
    note(metrics::pixel_accuracy(a, b), 100.0 * agree / a.size());
    note(metrics::mask_iou(a, b), 100.0 * inter / (sa + sb - inter));

    const BoxTuple p{pos(rng), pos(rng), side(rng)}, g{pos(rng), pos(rng), side(rng)};
    auto overlap = [](double c1, double s1, double c2, double s2) {
      return std::max(0.0, std::min(c1 + s1 / 2, c2 + s2 / 2) - std::max(c1 - s1 / 2, c2 - s2 / 2));
    };
    const double i = overlap(p.cx, p.side, g.cx, g.side) * overlap(p.cy, p.side, g.cy, g.side);
    note(metrics::box_iou(p, g), 100.0 * i / (p.side * p.side + g.side * g.side - i));
  }
  const std::vector<int> preds{1, 1, 1, 2, 2, 2, 2, 2, 1, 1}, gts{1, 1, 1, 1, 2, 2, 2, 2, 2, 2};
  auto rep = metrics::classification_report(preds, gts);
  note(rep.tpr, 75.0);
  note(rep.tnr, 400.0 / 6.0);
  note(rep.acc, 70.0);
  return worst;
}

Outcome oracle_suites() {
  std::mt19937_64 rng(11);
  const double sobel = sobel_error(rng), fscv = fsc_error(rng), glcm = glcm_error(rng),
               loss = loss_error(), met = metrics_error(rng);
  Outcome o;
  o.pass = sobel <= 1e-6 && fscv <= 1e-6 && glcm <= 1e-9 && loss <= 1e-9 && met <= 1e-9;
  o.detail = "sobel " + fmt("%.2g", sobel) + " fsc " + fmt("%.2g", fscv) + " glcm " +
             fmt("%.2g", glcm) + " losses " + fmt("%.2g", loss) + " metrics " + fmt("%.2g", met);
  return o;
}

// ---------------------------------------------------------------- cswp

Outcome cswp_invariants() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> pos(0, 100), side(1, 80);
  bool partition = true, equivariant = true;
  for (int t = 0; t < 500; ++t) {
    // zero border so a shift of up to 3 px keeps every foreground cell inside
    auto mask = random_mask(100, 100, rng, 0.3);
    for (int r = 0; r < 100; ++r)
      for (int c = 0; c < 100; ++c)
        if (r < 4 || r >= 96 || c < 4 || c >= 96)
          mask.at(r, c) = 0;
    const BoxTuple box{pos(rng), pos(rng), side(rng)};
    auto canvas = cswp::integrate(mask, box);
    const long s = cswp::window_geometry(box).side;
    const long twos = std::count(canvas.values.values.begin(), canvas.values.values.end(), 2.0F);
    partition = partition && twos == 64L * 64L - s * s;

    const int dy = static_cast<int>(rng() % 7) - 3, dx = static_cast<int>(rng() % 7) - 3;
    Grid shifted(100, 100);
    for (int r = 4; r < 96; ++r)
      for (int c = 4; c < 96; ++c)
        shifted.at(r + dy, c + dx) = mask.at(r, c);
    const BoxTuple moved{box.cx + dx, box.cy + dy, box.side};
    if (moved.cx >= 0 && moved.cx < 100 && moved.cy >= 0 && moved.cy < 100)
      equivariant = equivariant && cswp::integrate(shifted, moved).values == canvas.values;
  }

  // soft window: finite differences on the box centre
  std::vector<Real> pv(48 * 48);
  for (int r = 0; r < 48; ++r)
    for (int c = 0; c < 48; ++c)
      pv[r * 48 + c] =
          static_cast<Real>(std::exp(-((r - 22.0) * (r - 22.0) + (c - 25.0) * (c - 25.0)) / 50.0));
  auto probs = Tensor::from({1, 1, 48, 48}, pv);
  std::vector<double> weights(64 * 64);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto &v : weights)
    v = u(rng);
  double worst = 0;
  for (double cx : {24.3, 20.6}) {
    for (double cy : {21.2, 26.7}) {
      auto value = [&](double x, double y, Tensor *grad_box) {
        auto box = Tensor::parameter({1, 3}, {static_cast<Real>(x), static_cast<Real>(y), Real(14.4)});
        auto canvas = cswp::integrate_soft(probs, box, {cswp::WindowMode::Soft, 4.0});
        std::vector<Real> wv(weights.begin(), weights.end());
        auto loss = nn::sum(nn::mul(canvas, Tensor::from({1, 1, 64, 64}, wv)));
        if (grad_box) {
          loss.backward();
          *grad_box = box;
        }
        double acc = 0;
        for (std::size_t i = 0; i < weights.size(); ++i)
          acc += weights[i] * canvas.values()[i];
        return acc;
      };
      Tensor box;
      value(cx, cy, &box);
      const double h = 0.05;
      const double fx = (value(cx + h, cy, nullptr) - value(cx - h, cy, nullptr)) / (2 * h);
      const double fy = (value(cx, cy + h, nullptr) - value(cx, cy - h, nullptr)) / (2 * h);
      const double gx = box.grad()[0], gy = box.grad()[1];
      worst = std::max({worst, std::abs(gx - fx) / std::max(std::abs(fx), 1e-3),
                        std::abs(gy - fy) / std::max(std::abs(fy), 1e-3)});
    }
  }
  return {partition && equivariant && worst < 1e-2,
          std::string("partition ") + (partition ? "exact" : "broken") + ", equivariance " +
              (equivariant ? "exact" : "broken") + ", soft centre FD rel err " +
              fmt("%.2g", worst)};
}

// ---------------------------------------------------------------- training

std::vector<std::vector<Real>> snapshot(const nn::ParamList &pl) {
  std::vector<std::vector<Real>> out;
  for (const auto &p : pl.items())
    out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

Outcome gradient_flow() {
  CorpusSpec spec;
  spec.count = 2;
  spec.seed = 21;
  spec.class_mix = {0, 0.5, 0.5};
  auto corpus = generate_corpus(spec);

  int missing = 0, total = 0;
  for (auto mode : {cswp::WindowMode::Soft, cswp::WindowMode::Hard}) {
    TrainConfig cfg;
    cfg.learning_rate = 0;
    cfg.model.cswp_mode = mode;
    Trainer tr(cfg, corpus);
    tr.train_step({0, 1});
    for (const auto *group : {&tr.network().theta_seg, &tr.network().theta_dec})
      for (const auto &p : group->items()) {
        auto g = p.tensor.grad();
        ++total;
        const bool ok = g.size() == p.tensor.size() &&
                        std::all_of(g.begin(), g.end(), [](Real v) { return std::isfinite(v); }) &&
                        std::any_of(g.begin(), g.end(), [](Real v) { return v != 0; });
        if (!ok) {
          ++missing;
          std::printf("  no gradient: %s\n", p.name.c_str());
        }
      }
  }

  // same D update, different generator objective: D must come out identical
  auto dis_after = [&](double adv) {
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.weights.lambda1 = cfg.weights.lambda3 = adv;
    Trainer tr(cfg, corpus);
    tr.train_step({0, 1});
    return std::make_pair(snapshot(tr.network().theta_dis), snapshot(tr.network().theta_seg));
  };
  auto [dis_a, seg_a] = dis_after(1.0);
  auto [dis_b, seg_b] = dis_after(0.0);
  const bool frozen = dis_a == dis_b && seg_a != seg_b;
  return {missing == 0 && frozen, std::to_string(total - missing) + "/" + std::to_string(total) +
                                      " generator tensors with gradient, discriminator " +
                                      (frozen ? "unchanged" : "changed") + " by generator step"};
}

Outcome loss_gradients() {
  using namespace objectives;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
  };
  const double h = 1e-6;
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> pred(6), tgt(6);
    for (std::size_t i = 0; i < 6; ++i) {
      pred[i] = u(rng);
      tgt[i] = i % 2 ? 1.0 : u(rng);
    }
    auto g = pix_ce_grad(pred, tgt);
    for (std::size_t i = 0; i < 6; ++i) {
      auto up = pred, down = pred;
      up[i] += h;
      down[i] -= h;
      worst = std::max(worst, rel(g[i], (pix_ce(up, tgt) - pix_ce(down, tgt)) / (2 * h)));
    }
    const double s = u(rng);
    for (int label : {0, 1})
      worst = std::max(worst, rel(adv_loss_grad(s, label),
                                  (adv_loss(s + h, label) - adv_loss(s - h, label)) / (2 * h)));
    // box regression: chain rule through smooth_l1 on each normalised coordinate
    const double extent = 64;
    BoxTuple p{u(rng) * 64, u(rng) * 64, u(rng) * 40}, tb{u(rng) * 64, u(rng) * 64, u(rng) * 40};
    if (t % 3 == 0)
      p.cx = tb.cx + 100; // linear branch
    double *coord[3] = {&p.cx, &p.cy, &p.side};
    const double tc[3] = {tb.cx, tb.cy, tb.side};
    for (int k = 0; k < 3; ++k) {
      const double analytic = smooth_l1_grad((*coord[k] - tc[k]) / extent) / extent;
      const double keep = *coord[k];
      *coord[k] = keep + h * extent;
      const double up = box_regression(p, tb, extent);
      *coord[k] = keep - h * extent;
      const double down = box_regression(p, tb, extent);
      *coord[k] = keep;
      worst = std::max(worst, rel(analytic, (up - down) / (2 * h * extent)));
    }
  }
  return {worst < 1e-3, "max rel err " + fmt("%.2g", worst) + " (pix_ce, adv_loss, smooth_l1 box)"};
}

metrics::EvalReport train_and_score(const TrainConfig &cfg, const std::vector<Sample> &train,
                                    const std::vector<Sample> &eval) {
  auto rows = pipeline::run_sweep({{"run", cfg}}, train, eval);
  return rows.front().report;
}

Outcome overfit() {
  CorpusSpec spec;
  spec.count = 8;
  spec.seed = 7;
  auto corpus = generate_corpus(spec);
  TrainConfig cfg;
  cfg.model.base_channels = 16;
  cfg.batch_size = 4;
  cfg.model.cswp_mode = cswp::WindowMode::Hard;
  cfg.weights.lambda1 = cfg.weights.lambda3 = 0.01;
  cfg.weights.lambda2 = 10;
  cfg.optimizer = OptimizerKind::Adam;
  cfg.learning_rate = 1e-3;
  cfg.iterations = 500;
  auto r = train_and_score(cfg, corpus, corpus);
  return {r.dsc >= 90 && r.acc == 100 && r.iou >= 70,
          "DSC " + fmt("%.2f", r.dsc) + " Acc " + fmt("%.2f", r.acc) + " IoU " +
              fmt("%.2f", r.iou) + " (need 90 / 100 / 70)"};
}

Outcome ablation_monotonicity() {
  CorpusSpec train_spec;
  train_spec.count = 64;
  train_spec.seed = 7;
  CorpusSpec eval_spec = train_spec;
  eval_spec.count = 32;
  eval_spec.seed = 8;
  const auto train = generate_corpus(train_spec), eval = generate_corpus(eval_spec);
  TrainConfig base;
  base.model.base_channels = 8;
  base.model.cswp_mode = cswp::WindowMode::Hard;
  base.weights.lambda1 = base.weights.lambda3 = 0.01;
  base.weights.lambda2 = 10;
  base.optimizer = OptimizerKind::Adam;
  base.learning_rate = 1e-3;
  base.batch_size = 4;
  base.iterations = 300;
  auto entries = pipeline::sweep_entries(pipeline::SweepKind::Ablations, base);
  auto rows = pipeline::run_sweep(entries, train, eval);
  const auto &full = rows.front().report;
  int held = 0;
  std::string detail = "full DSC " + fmt("%.1f", full.dsc) + " Acc " + fmt("%.1f", full.acc) + ";";
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto &r = rows[i].report;
    const bool ok = full.dsc >= r.dsc && full.acc >= r.acc;
    held += ok;
    detail += " " + rows[i].label + " " + fmt("%.1f", r.dsc) + "/" + fmt("%.1f", r.acc) +
              (ok ? "" : "*");
  }
  detail += "; full >= variant in " + std::to_string(held) + "/" +
            std::to_string(rows.size() - 1) + " (need 3)";
  return {rows.size() == 6 && held >= 3, detail};
}

Outcome sweep_shape() {
  CorpusSpec spec;
  spec.count = 4;
  spec.height = spec.width = 32;
  const auto data = generate_corpus(spec);
  TrainConfig base;
  base.model.base_channels = 2;
  base.iterations = 2;
  auto dir = scratch("sweep");
  std::string detail;
  bool ok = true;
  for (auto kind : {pipeline::SweepKind::Modalities, pipeline::SweepKind::Phases}) {
    auto rows = pipeline::run_sweep(pipeline::sweep_entries(kind, base), data, data);
    std::ostringstream csv;
    pipeline::write_sweep_csv(rows, csv);
    std::istringstream in(csv.str());
    std::string line;
    std::getline(in, line);
    const bool header = line == pipeline::kSweepCsvHeader;
    int n = 0;
    while (std::getline(in, line))
      n += !line.empty();
    ok = ok && header && n == 7;
    detail += std::string(kind == pipeline::SweepKind::Modalities ? "modalities " : "phases ") +
              std::to_string(n) + " rows" + (header ? "" : " (bad header)") + "; ";
  }
  return {ok, detail + "need 7 each"};
}

Outcome determinism() {
  auto dir = scratch("determinism");
  const std::vector<std::string> train_args = {"--iterations", "20", "--checkpoint-every", "10",
                                               "--base-channels", "4", "--optimizer", "adam",
                                               "--lr", "1e-3"};
  bool ok = true;
  for (const char *run : {"a", "b"}) {
    const auto root = dir / run;
    ok = ok && ual_run({"generate", "--seed", "5", "--count", "8", "--out",
                        (root / "data").string()}) == 0;
    std::vector<std::string> t = {"train", "--data", (root / "data").string(), "--out",
                                  (root / "train").string()};
    t.insert(t.end(), train_args.begin(), train_args.end());
    ok = ok && ual_run(t) == 0;
    ok = ok && ual_run({"eval", "--data", (root / "data").string(), "--checkpoint",
                        (root / "train" / "final.ual").string(), "--out",
                        (root / "eval").string()}) == 0;
  }
  if (!ok)
    return {false, "a pipeline command failed"};
  const bool gen = tree(dir / "a" / "data") == tree(dir / "b" / "data");
  const bool trn = tree(dir / "a" / "train") == tree(dir / "b" / "train");
  const bool evl = tree(dir / "a" / "eval") == tree(dir / "b" / "eval");

  // resume from step 10 in a fresh directory
  const auto c = dir / "c";
  fs::create_directories(c);
  fs::copy(dir / "a" / "train" / "checkpoint_000010.ual", c / "checkpoint_000010.ual");
  {
    std::istringstream log(slurp(dir / "a" / "train" / "train_log.csv"));
    std::ofstream part(c / "train_log.csv");
    std::string line;
    for (int i = 0; i <= 10 && std::getline(log, line); ++i)
      part << line << "\n";
  }
  const bool resumed =
      ual_run({"train", "--data", (dir / "a" / "data").string(), "--out", c.string(), "--resume",
               (c / "checkpoint_000010.ual").string()}) == 0 &&
      slurp(c / "final.ual") == slurp(dir / "a" / "train" / "final.ual") &&
      slurp(c / "train_log.csv") == slurp(dir / "a" / "train" / "train_log.csv");
  auto word = [](bool b) { return b ? "identical" : "DIFFERENT"; };
  return {gen && trn && evl && resumed, std::string("generate ") + word(gen) + ", train " +
                                            word(trn) + ", eval " + word(evl) +
                                            ", resume@10 vs continuous@20 " + word(resumed)};
}

} // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"oracle suites", 30, oracle_suites},
      {"cswp invariants", 30, cswp_invariants},
      {"gradient-flow audit", 60, gradient_flow},
      {"loss-gradient correctness", 0, loss_gradients},
      {"overfit sanity", 600, overfit},
      {"ablation monotonicity", 0, ablation_monotonicity},
      {"combination sweep shape", 0, sweep_shape},
      {"determinism", 0, determinism},
  };
  int failed = 0;
  for (const auto &c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = o.pass;
    std::string timing = fmt("%.1f s", secs);
    if (c.time_limit_s > 0) {
      timing += fmt(" (limit %.0f s)", c.time_limit_s);
      pass = pass && secs < c.time_limit_s;
    }
    failed += !pass;
    std::printf("%s  %-26s %s  [%s]\n", pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
