#include "ual/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "ual/checkpoint.hpp"
#include "ual/cswp.hpp"
#include "ual/errors.hpp"
#include "ual/nn/ops.hpp"
#include "ual/uald_io.hpp"

namespace ual {

using nlohmann::ordered_json;
using nn::Real;
using nn::Tensor;

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  model.validate();
  if (batch_size < 1)
    throw ConfigError("batch_size must be >= 1, got " + std::to_string(batch_size));
  if (iterations < 1)
    throw ConfigError("iterations must be >= 1, got " + std::to_string(iterations));
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be a finite value >= 0");
  if (weights.lambda1 < 0 || weights.lambda2 < 0 || weights.lambda3 < 0)
    throw ConfigError("loss weights must be nonnegative");
  if (checkpoint_every < 0)
    throw ConfigError("checkpoint_every must be >= 0");
}

ordered_json to_json(const TrainConfig &cfg) {
  ordered_json m;
  m["base_channels"] = cfg.model.base_channels;
  m["modalities"] = join_modalities(cfg.model.modalities);
  m["phases"] = join_phases(cfg.model.phases);
  m["ablate"] = ablation_string(cfg.model.components);
  m["cswp_mode"] = cfg.model.cswp_mode == cswp::WindowMode::Soft ? "soft" : "hard";
  m["cswp_sharpness"] = cfg.model.cswp_sharpness;
  ordered_json j;
  j["model"] = m;
  j["batch_size"] = cfg.batch_size;
  j["iterations"] = cfg.iterations;
  j["learning_rate"] = cfg.learning_rate;
  j["lambda1"] = cfg.weights.lambda1;
  j["lambda2"] = cfg.weights.lambda2;
  j["lambda3"] = cfg.weights.lambda3;
  j["optimizer"] = cfg.optimizer == OptimizerKind::Adam ? "adam" : "sgd";
  j["disc_labels"] =
      cfg.disc_labels == objectives::DiscLabels::Printed ? "printed" : "conventional";
  j["seed"] = cfg.seed;
  j["checkpoint_every"] = cfg.checkpoint_every;
  return j;
}

TrainConfig train_config_from_json(const ordered_json &j) {
  try {
    TrainConfig cfg;
    const auto &m = j.at("model");
    cfg.model.base_channels = m.at("base_channels").get<int>();
    cfg.model.modalities = parse_modalities(m.at("modalities").get<std::string>());
    cfg.model.phases = parse_phases(m.at("phases").get<std::string>());
    std::stringstream abl(m.at("ablate").get<std::string>());
    for (std::string name; std::getline(abl, name, ',');)
      ablate(cfg.model.components, name);
    const auto mode = m.at("cswp_mode").get<std::string>();
    if (mode != "soft" && mode != "hard")
      throw ConfigError("unknown cswp_mode '" + mode + "'");
    cfg.model.cswp_mode = mode == "soft" ? cswp::WindowMode::Soft : cswp::WindowMode::Hard;
    cfg.model.cswp_sharpness = m.at("cswp_sharpness").get<double>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.iterations = j.at("iterations").get<long>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.weights.lambda1 = j.at("lambda1").get<double>();
    cfg.weights.lambda2 = j.at("lambda2").get<double>();
    cfg.weights.lambda3 = j.at("lambda3").get<double>();
    const auto opt = j.at("optimizer").get<std::string>();
    if (opt != "sgd" && opt != "adam")
      throw ConfigError("unknown optimizer '" + opt + "'");
    cfg.optimizer = opt == "adam" ? OptimizerKind::Adam : OptimizerKind::Sgd;
    const auto labels = j.at("disc_labels").get<std::string>();
    if (labels != "conventional" && labels != "printed")
      throw ConfigError("unknown disc_labels '" + labels + "'");
    cfg.disc_labels = labels == "printed" ? objectives::DiscLabels::Printed
                                          : objectives::DiscLabels::Conventional;
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.checkpoint_every = j.at("checkpoint_every").get<long>();
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("config echo: ") + e.what());
  }
}

std::string format_log_row(const StepRecord &r) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%ld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", r.step, r.l_seg,
                r.l_pixce, r.l_adv_seg, r.l_cls, r.l_reg, r.l_adv_dec, r.l_disc);
  return buf;
}

// ---------------------------------------------------------------- trainer

struct Trainer::Prepared {
  SampleInput input;
  std::vector<Real> mask;
  std::vector<Real> real_canvas; // 64x64
  std::vector<double> real_mpr;  // normalised, empty when MPR is off
  std::vector<const Grid *> phases;
  bool positive = false;
};

namespace {

std::unique_ptr<nn::Optimizer> make_optimizer(const TrainConfig &cfg) {
  if (cfg.optimizer == OptimizerKind::Adam)
    return std::make_unique<nn::Adam>(cfg.learning_rate);
  return std::make_unique<nn::Sgd>(cfg.learning_rate);
}

std::vector<Real> resized_canvas(const Grid &g) {
  nn::NoGradGuard guard;
  auto t = nn::resize_bilinear(
      Tensor::from({1, 1, g.height, g.width}, {g.values.begin(), g.values.end()}),
      cswp::kCanvasSize, cswp::kCanvasSize);
  return {t.values().begin(), t.values().end()};
}

void check_finite(const StepRecord &r) {
  for (double v : {r.l_seg, r.l_pixce, r.l_adv_seg, r.l_cls, r.l_reg, r.l_adv_dec, r.l_disc})
    if (!std::isfinite(v))
      throw NumericError("step " + std::to_string(r.step) + ": non-finite loss (" +
                         std::string(kTrainLogHeader) + " = " + format_log_row(r) + ")");
}

std::vector<nn::NamedTensor> with_prefix(const std::vector<nn::NamedTensor> &ts,
                                         const std::string &prefix) {
  std::vector<nn::NamedTensor> out;
  for (const auto &t : ts)
    out.push_back({prefix + t.name, t.tensor});
  return out;
}

std::vector<nn::NamedTensor> strip_prefix(const std::vector<nn::NamedTensor> &ts,
                                          const std::string &prefix) {
  std::vector<nn::NamedTensor> out;
  for (const auto &t : ts)
    if (t.name.rfind(prefix, 0) == 0)
      out.push_back({t.name.substr(prefix.size()), t.tensor});
  return out;
}

} // namespace

Trainer::Trainer(TrainConfig cfg, std::vector<Sample> corpus)
    : cfg_(std::move(cfg)), corpus_(std::move(corpus)) {
  cfg_.validate();
  if (corpus_.empty())
    throw ConfigError("training corpus is empty");
  net_ = make_network(cfg_.model, cfg_.seed);
  opt_seg_ = make_optimizer(cfg_);
  opt_dec_ = make_optimizer(cfg_);
  opt_dis_ = make_optimizer(cfg_);

  const bool use_mpr = cfg_.model.mpr_length() > 0;
  const bool use_cswp = cfg_.model.components.cswp;
  std::vector<std::vector<double>> raw_rows;
  std::vector<std::vector<double>> raw_per_sample(corpus_.size());
  for (std::size_t i = 0; i < corpus_.size(); ++i) {
    const Sample &s = corpus_[i];
    auto p = std::make_unique<Prepared>();
    p->input = prepare_input(s, cfg_.model);
    if (s.mask.height != corpus_.front().mask.height || s.mask.width != corpus_.front().mask.width)
      throw DataError("sample " + s.id + " differs in size from " + corpus_.front().id);
    p->mask.assign(s.mask.values.begin(), s.mask.values.end());
    p->positive = s.cls >= 1;
    if (p->positive && !s.box)
      throw DataError("sample " + s.id + ": class " + std::to_string(s.cls) + " without a box");
    for (Phase ph : cfg_.model.phases)
      p->phases.push_back(&s.phase(ph));
    if (!p->positive) {
      p->real_canvas.assign(static_cast<std::size_t>(cswp::kCanvasSize) * cswp::kCanvasSize,
                            cswp::kPadValue);
    } else if (use_cswp) {
      // same window rendering as the predictions
      const Grid canvas = cfg_.model.cswp_mode == cswp::WindowMode::Hard
                              ? cswp::integrate(s.mask, *s.box).values
                              : cswp::integrate_soft(s.mask, *s.box,
                                                     {cswp::WindowMode::Soft,
                                                      cfg_.model.cswp_sharpness});
      p->real_canvas.assign(canvas.values.begin(), canvas.values.end());
    } else {
      p->real_canvas = resized_canvas(s.mask);
    }
    if (use_mpr && p->positive) {
      raw_per_sample[i] =
          use_cswp ? radiomics::extract_mpr(cswp::integrate(s.mask, *s.box).values, p->phases,
                                            *s.box)
                         .values
                   : radiomics::extract_mpr_full(s.mask, p->phases).values;
      raw_rows.push_back(raw_per_sample[i]);
    }
    cache_.push_back(std::move(p));
  }
  if (use_mpr) {
    if (!raw_rows.empty())
      normalizer_ = radiomics::Normalizer::fit(raw_rows);
    for (std::size_t i = 0; i < corpus_.size(); ++i) {
      auto &v = cache_[i]->real_mpr;
      v = raw_per_sample[i];
      if (v.empty())
        v.assign(static_cast<std::size_t>(cfg_.model.mpr_length()), 0.0);
      else if (!normalizer_.empty())
        normalizer_.apply(v);
    }
  }
}

Trainer::~Trainer() = default;

const Trainer::Prepared &Trainer::prepared(std::size_t index) { return *cache_.at(index); }

std::vector<std::size_t> Trainer::batch_indices(long step) const {
  if (step < 1)
    throw ConfigError("batch_indices: steps are 1-based");
  const std::size_t n = corpus_.size();
  std::vector<std::size_t> out;
  for (int j = 0; j < cfg_.batch_size; ++j) {
    const std::uint64_t g = static_cast<std::uint64_t>(step - 1) * cfg_.batch_size + j;
    const std::uint64_t epoch = g / n;
    while (perms_.size() <= epoch) {
      const std::uint64_t e = perms_.size();
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed),
                        static_cast<std::uint32_t>(cfg_.seed >> 32), static_cast<std::uint32_t>(e),
                        static_cast<std::uint32_t>(e >> 32), 0xba7c4u};
      std::mt19937_64 rng(seq);
      std::shuffle(perm.begin(), perm.end(), rng);
      perms_.push_back(std::move(perm));
    }
    out.push_back(perms_[epoch][g % n]);
  }
  return out;
}

StepRecord Trainer::step() { return train_step(batch_indices(step_ + 1)); }

StepRecord Trainer::train_step(const std::vector<std::size_t> &batch) {
  if (batch.empty())
    throw ConfigError("train_step: empty batch");
  const ModelConfig &mc = cfg_.model;
  const auto &w = cfg_.weights;
  const int B = static_cast<int>(batch.size());

  std::vector<const Prepared *> items;
  std::vector<const SampleInput *> inputs;
  for (std::size_t i : batch) {
    items.push_back(&prepared(i));
    inputs.push_back(&items.back()->input);
  }
  const NetInput in = batch_input(inputs);
  const int H = in.height, W = in.width;

  StepRecord rec;
  rec.step = step_ + 1;

  // Stages 1-2
  const Forward f = forward(net_, in);

  std::vector<Real> mask;
  std::vector<int> cls;
  std::vector<double> pos(B, 0.0), box_target(static_cast<std::size_t>(B) * 3, 0.0);
  std::vector<Real> inv_extent;
  const double ext_side = std::max(H, W);
  for (int n = 0; n < B; ++n) {
    const Sample &s = corpus_[batch[n]];
    mask.insert(mask.end(), items[n]->mask.begin(), items[n]->mask.end());
    cls.push_back(s.cls);
    inv_extent.insert(inv_extent.end(), {Real(1.0 / W), Real(1.0 / H), Real(1.0 / ext_side)});
    if (items[n]->positive) {
      pos[n] = 1.0;
      box_target[3 * n] = s.box->cx / W;
      box_target[3 * n + 1] = s.box->cy / H;
      box_target[3 * n + 2] = s.box->side / ext_side;
    }
  }
  const Tensor l_pixce =
      objectives::bce_with_logits_mean(f.seg_logits, Tensor::from({B, 1, H, W}, std::move(mask)));
  const Tensor l_cls = objectives::softmax_cross_entropy(f.det.class_logits, cls);
  const Tensor box_norm = nn::mul(f.det.box, Tensor::from({B, 3}, std::move(inv_extent)));
  const Tensor l_reg = objectives::smooth_l1_loss(box_norm, box_target, pos);
  rec.l_pixce = l_pixce.item();
  rec.l_cls = l_cls.item();
  rec.l_reg = l_reg.item();

  Tensor total = nn::add(nn::add(l_pixce, l_cls), nn::scale(l_reg, static_cast<Real>(w.lambda2)));

  const bool any_positive = std::any_of(pos.begin(), pos.end(), [](double v) { return v > 0; });
  if (net_.dis && any_positive) {
    // Stage 3: coordinate sharing (or its ablation) on the predictions
    const Tensor probs = nn::sigmoid(f.seg_logits);
    Tensor fake;
    if (mc.components.cswp)
      fake = cswp::integrate_soft(probs, f.det.box, {mc.cswp_mode, mc.cswp_sharpness});
    else
      fake = nn::resize_bilinear(probs, cswp::kCanvasSize, cswp::kCanvasSize);

    std::vector<Real> real;
    for (const Prepared *p : items)
      real.insert(real.end(), p->real_canvas.begin(), p->real_canvas.end());
    const Tensor real_canvas =
        Tensor::from({B, 1, cswp::kCanvasSize, cswp::kCanvasSize}, std::move(real));

    Tensor fake_mpr, real_mpr;
    const int M = mc.mpr_length();
    if (M > 0) {
      std::vector<Real> fv, rv;
      for (int n = 0; n < B; ++n) {
        const Prepared *p = items[n];
        rv.insert(rv.end(), p->real_mpr.begin(), p->real_mpr.end());
        radiomics::MprVector v;
        v.values.assign(static_cast<std::size_t>(M), 0.0);
        if (p->positive) {
          const Grid probs_n = heads::seg_prediction(f.seg_logits, n).probs;
          if (mc.components.cswp) {
            const auto box = heads::det_prediction(f.det, n, H, W).box;
            const Grid hard = cswp::integrate_soft(probs_n, box, {cswp::WindowMode::Hard, 1.0});
            v = radiomics::extract_mpr(hard, p->phases, box, &normalizer_);
          } else {
            v = radiomics::extract_mpr_full(probs_n, p->phases, &normalizer_);
          }
          rec.empty_regions += v.empty_region;
        }
        fv.insert(fv.end(), v.values.begin(), v.values.end());
      }
      fake_mpr = Tensor::from({B, M}, std::move(fv));
      real_mpr = Tensor::from({B, M}, std::move(rv));
    }

    // Stage 4a: discriminator update on detached predictions
    const bool printed = cfg_.disc_labels == objectives::DiscLabels::Printed;
    net_.theta_dis.set_requires_grad(true);
    net_.theta_dis.zero_grad();
    {
      const Tensor zf = mprgd::discriminate_logits(fake.detach(), fake_mpr, *net_.dis);
      const Tensor zr = mprgd::discriminate_logits(real_canvas, real_mpr, *net_.dis);
      const Tensor l_disc = nn::add(objectives::adv_loss_logits(zf, printed ? 1 : 0, pos),
                                    objectives::adv_loss_logits(zr, printed ? 0 : 1, pos));
      rec.l_disc = l_disc.item();
      if (!std::isfinite(rec.l_disc))
        check_finite(rec);
      l_disc.backward();
      opt_dis_->step(net_.theta_dis);
    }

    // Stage 4b: adversarial term for the generator with the discriminator frozen
    net_.theta_dis.set_requires_grad(false);
    const Tensor zg = mprgd::discriminate_logits(fake, fake_mpr, *net_.dis);
    const Tensor l_adv = objectives::adv_loss_logits(zg, 1, pos);
    rec.l_adv_seg = l_adv.item();
    const double adv_weight = w.lambda1 + (mc.components.cswp ? w.lambda3 : 0.0);
    if (mc.components.cswp)
      rec.l_adv_dec = rec.l_adv_seg;
    total = nn::add(total, nn::scale(l_adv, static_cast<Real>(adv_weight)));
  }
  rec.l_seg = rec.l_pixce + w.lambda1 * rec.l_adv_seg;
  check_finite(rec);

  net_.theta_seg.zero_grad();
  net_.theta_dec.zero_grad();
  total.backward();
  opt_seg_->step(net_.theta_seg);
  opt_dec_->step(net_.theta_dec);
  net_.theta_dis.set_requires_grad(true);
  step_ = rec.step;
  return rec;
}

void Trainer::save_checkpoint(const std::filesystem::path &path) const {
  checkpoint::Checkpoint ck;
  ck.header["format"] = "ual-checkpoint";
  ck.header["version"] = 1;
  ck.header["step"] = step_;
  ck.header["config"] = to_json(cfg_);
  ck.header["normalizer"] = {{"mean", normalizer_.mean}, {"stddev", normalizer_.stddev}};
  const nn::ParamList all = net_.all_params();
  for (const auto &p : all.items())
    ck.tensors.push_back({"param/" + p.name, p.tensor});
  for (auto &&[prefix, opt] : {std::pair{"opt/seg/", opt_seg_.get()},
                               std::pair{"opt/dec/", opt_dec_.get()},
                               std::pair{"opt/dis/", opt_dis_.get()}}) {
    auto st = with_prefix(opt->state(), prefix);
    ck.tensors.insert(ck.tensors.end(), st.begin(), st.end());
  }
  checkpoint::write(path, ck);
}

void Trainer::load_checkpoint(const std::filesystem::path &path) {
  const auto ck = checkpoint::read(path);
  try {
    if (ck.header.at("config").at("model") != to_json(cfg_).at("model"))
      throw ConfigError(path.string() + ": checkpoint model config differs from this run");
    auto all = net_.all_params();
    checkpoint::load_params(ck, "param/", all, path);
    opt_seg_->load_state(strip_prefix(ck.tensors, "opt/seg/"));
    opt_dec_->load_state(strip_prefix(ck.tensors, "opt/dec/"));
    opt_dis_->load_state(strip_prefix(ck.tensors, "opt/dis/"));
    normalizer_.mean = ck.header.at("normalizer").at("mean").get<std::vector<double>>();
    normalizer_.stddev = ck.header.at("normalizer").at("stddev").get<std::vector<double>>();
    step_ = ck.header.at("step").get<long>();
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  // cached radiomics targets depend on the normaliser
  if (cfg_.model.mpr_length() > 0)
    for (std::size_t i = 0; i < corpus_.size(); ++i) {
      Prepared &p = *cache_[i];
      if (!p.positive)
        continue;
      const Sample &s = corpus_[i];
      p.real_mpr = cfg_.model.components.cswp
                       ? radiomics::extract_mpr(cswp::integrate(s.mask, *s.box).values, p.phases,
                                                *s.box, &normalizer_)
                             .values
                       : radiomics::extract_mpr_full(s.mask, p.phases, &normalizer_).values;
    }
}

// ---------------------------------------------------------------- driver

void train(Trainer &trainer, const TrainOptions &opts) {
  namespace fs = std::filesystem;
  fs::create_directories(opts.out_dir);
  const fs::path log_path = opts.out_dir / "train_log.csv";
  std::string log = std::string(kTrainLogHeader) + "\n";
  if (!opts.resume_from.empty()) {
    trainer.load_checkpoint(opts.resume_from);
    std::ifstream in(log_path);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (first) {
        first = false;
        continue;
      }
      if (!line.empty() && std::stol(line.substr(0, line.find(','))) <= trainer.steps_done())
        log += line + "\n";
    }
  }
  io::write_file_atomic(log_path, log);
  std::ofstream out(log_path, std::ios::app);
  if (!out)
    throw DataError(log_path.string() + ": cannot open for appending");
  const TrainConfig &cfg = trainer.config();
  while (trainer.steps_done() < cfg.iterations) {
    const StepRecord r = trainer.step();
    out << format_log_row(r) << '\n';
    out.flush();
    if (opts.on_step)
      opts.on_step(r);
    if (cfg.checkpoint_every > 0 && r.step % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_%06ld.ual", r.step);
      trainer.save_checkpoint(opts.out_dir / name);
    }
  }
  trainer.save_checkpoint(opts.out_dir / "final.ual");
}

LoadedModel load_model(const std::filesystem::path &path) {
  const auto ck = checkpoint::read(path);
  LoadedModel m;
  try {
    m.cfg = train_config_from_json(ck.header.at("config"));
    m.step = ck.header.at("step").get<long>();
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(path.string() + ": malformed checkpoint header: " + e.what());
  } catch (const ConfigError &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  m.net = make_network(m.cfg.model, m.cfg.seed);
  auto all = m.net.all_params();
  checkpoint::load_params(ck, "param/", all, path);
  return m;
}

} // namespace ual
