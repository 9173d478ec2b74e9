#include "ual/network.hpp"

#include <algorithm>
#include <random>

#include "ual/errors.hpp"
#include "ual/nn/ops.hpp"

namespace ual {

namespace {

std::mt19937_64 component_rng(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    tag};
  return std::mt19937_64(seq);
}

int index_of(const std::vector<Modality> &ms, Modality m) {
  auto it = std::find(ms.begin(), ms.end(), m);
  return it == ms.end() ? -1 : static_cast<int>(it - ms.begin());
}

std::vector<nn::Real> to_real(const Grid &g) { return {g.values.begin(), g.values.end()}; }

} // namespace

nn::ParamList Network::all_params() const {
  nn::ParamList all;
  all.append(theta_seg);
  all.append(theta_dec);
  all.append(theta_dis);
  return all;
}

Network make_network(const ModelConfig &cfg, std::uint64_t seed) {
  cfg.validate();
  Network net;
  net.cfg = cfg;
  const int b = cfg.base_channels;
  const int top = encoder::block_channels(b, encoder::kBlocks - 1);
  const int k = static_cast<int>(cfg.modalities.size());
  auto rng = component_rng(seed, 1);
  net.enc = encoder::make_encoder(cfg, net.theta_seg, rng);
  rng = component_rng(seed, 2);
  if (cfg.components.fsc)
    net.fsc = fsc::make_fsc(top, k, cfg.has(Modality::T1), cfg.has(Modality::Dwi), net.theta_seg,
                            rng);
  else
    net.concat = fsc::make_concat(top, k, net.theta_seg, rng);
  rng = component_rng(seed, 3);
  net.decoder = heads::make_decoder(b, net.theta_seg, rng);
  rng = component_rng(seed, 4);
  net.det = heads::make_det_head(b, net.theta_dec, rng);
  if (cfg.components.mprgd) {
    rng = component_rng(seed, 5);
    net.dis = mprgd::make_discriminator(b, cfg.mpr_length(), net.theta_dis, rng);
  }
  return net;
}

SampleInput prepare_input(const Sample &s, const ModelConfig &cfg) {
  SampleInput in;
  in.height = s.height();
  in.width = s.width();
  for (Modality m : cfg.modalities) {
    const Grid &g = s.modality(m);
    if (g.empty())
      throw DataError("sample " + s.id + ": modality " + modality_name(m) + " missing");
    if (g.height != in.height || g.width != in.width)
      throw DataError("sample " + s.id + ": modality " + modality_name(m) +
                      " does not match the mask size");
    in.images.push_back(to_real(g));
  }
  for (Modality m : cfg.modalities) {
    std::vector<std::vector<nn::Real>> levels;
    if (cfg.components.edfpm)
      if (auto pyr = edfpm::pyramid_for(s, m, cfg.modalities, encoder::kBlocks))
        for (const Grid &g : pyr->levels)
          levels.push_back(to_real(g));
    in.pyramid.push_back(std::move(levels));
  }
  return in;
}

NetInput batch_input(const std::vector<const SampleInput *> &items) {
  if (items.empty())
    throw DataError("empty batch");
  NetInput in;
  in.batch = static_cast<int>(items.size());
  in.height = items.front()->height;
  in.width = items.front()->width;
  const std::size_t channels = items.front()->images.size();
  for (const SampleInput *s : items)
    if (s->height != in.height || s->width != in.width || s->images.size() != channels)
      throw DataError("batch samples differ in size");
  auto stack = [&](auto get, int h, int w) {
    std::vector<nn::Real> v;
    v.reserve(static_cast<std::size_t>(in.batch) * h * w);
    for (const SampleInput *s : items) {
      const auto &src = get(*s);
      v.insert(v.end(), src.begin(), src.end());
    }
    return nn::Tensor::from({in.batch, 1, h, w}, std::move(v));
  };
  for (std::size_t c = 0; c < channels; ++c) {
    in.images.push_back(
        stack([c](const SampleInput &s) -> const auto & { return s.images[c]; }, in.height,
              in.width));
    std::vector<nn::Tensor> levels;
    const std::size_t nlev = items.front()->pyramid[c].size();
    for (std::size_t l = 0; l < nlev; ++l)
      levels.push_back(stack(
          [c, l](const SampleInput &s) -> const auto & { return s.pyramid[c][l]; },
          in.height >> l, in.width >> l));
    in.pyramids.push_back(std::move(levels));
  }
  return in;
}

Forward forward(const Network &net, const NetInput &in) {
  Forward f;
  f.stacks = encoder::encode(net.enc, in.images, in.pyramids);
  if (net.fsc) {
    auto out = fsc::fuse(f.stacks, index_of(net.cfg.modalities, Modality::T1),
                         index_of(net.cfg.modalities, Modality::Dwi), *net.fsc);
    f.f_seg = out.f_seg;
    f.f_dec = out.f_dec;
  } else {
    f.f_seg = f.f_dec = fsc::fuse_ablated(f.stacks, *net.concat);
  }
  f.seg_logits = heads::decode_seg_logits(f.f_seg, net.decoder);
  f.det = heads::detect_raw(f.f_dec, net.det, in.height, in.width);
  return f;
}

std::pair<heads::SegPrediction, heads::DetPrediction> infer(const Sample &s, const Network &net) {
  nn::NoGradGuard guard;
  const SampleInput prepared = prepare_input(s, net.cfg);
  const NetInput in = batch_input({&prepared});
  const Forward f = forward(net, in);
  return {heads::seg_prediction(f.seg_logits, 0),
          heads::det_prediction(f.det, 0, in.height, in.width)};
}

} // namespace ual
