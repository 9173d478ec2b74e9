#include "ual/encoder.hpp"

#include <cmath>

#include "ual/errors.hpp"
#include "ual/nn/ops.hpp"

namespace ual::encoder {

namespace {

const double kReluGain = std::sqrt(6.0);

void check_finite(const nn::Tensor &t, Modality m, int block) {
  for (nn::Real v : t.values())
    if (!std::isfinite(v))
      throw NumericError(std::string("encoder ") + modality_name(m) + " block " +
                         std::to_string(block + 1) + ": non-finite activation");
}

} // namespace

int block_channels(int base, int block) { return base << block; }

Encoder make_encoder(const ModelConfig &cfg, nn::ParamList &params, std::mt19937_64 &rng) {
  Encoder enc;
  const int base = cfg.base_channels;
  for (Modality m : cfg.modalities) {
    Channel ch;
    ch.modality = m;
    const std::string prefix = std::string("enc/") + modality_name(m) + "/conv";
    int cin = 1;
    for (int k = 0; k < kBlocks; ++k) {
      const int cout = block_channels(base, k);
      Block b;
      const std::string name = prefix + std::to_string(k + 1);
      b.weight = params.add_uniform(name + "/w", {cout, cin, 3, 3}, cin * 9, rng, kReluGain);
      b.bias = params.add_zeros(name + "/b", {cout});
      ch.blocks.push_back(b);
      cin = cout;
    }
    enc.channels.push_back(std::move(ch));
  }
  if (cfg.components.edfpm)
    for (Channel &ch : enc.channels) {
      if (!edfpm::source_pair_for(ch.modality, cfg.modalities))
        continue;
      for (int k = 0; k < kBlocks; ++k) {
        const std::string name =
            std::string("enc/") + modality_name(ch.modality) + "/edfpm" + std::to_string(k + 1);
        ch.blocks[k].inject.weight =
            params.add_uniform(name + "/w", {block_channels(base, k), 1, 1, 1}, 1, rng);
      }
    }
  return enc;
}

std::vector<nn::Tensor> encode(const Encoder &enc, const std::vector<nn::Tensor> &images,
                               const std::vector<std::vector<nn::Tensor>> &pyramids) {
  if (images.size() != enc.channels.size())
    throw DimensionError("encode: " + std::to_string(images.size()) + " inputs for " +
                         std::to_string(enc.channels.size()) + " channels");
  if (!pyramids.empty() && pyramids.size() != images.size())
    throw DimensionError("encode: pyramid count does not match input count");
  std::vector<nn::Tensor> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const nn::Tensor &img = images[i];
    if (img.rank() != 4 || img.dim(1) != 1)
      throw DimensionError("encode: expected [N,1,H,W] input, got " + nn::shape_str(img.shape()));
    if (img.dim(2) % 16 || img.dim(3) % 16)
      throw DimensionError("encode: input " + std::to_string(img.dim(2)) + "x" +
                           std::to_string(img.dim(3)) + " is not divisible by 16");
    const Channel &ch = enc.channels[i];
    const std::vector<nn::Tensor> *pyr = pyramids.empty() ? nullptr : &pyramids[i];
    nn::Tensor x = img;
    for (int k = 0; k < kBlocks; ++k) {
      const Block &b = ch.blocks[k];
      x = nn::relu(nn::conv2d(x, b.weight, b.bias, 1));
      if (b.inject.weight.defined() && pyr != nullptr && !pyr->empty()) {
        if (pyr->size() < static_cast<std::size_t>(kBlocks))
          throw DimensionError("encode: pyramid has " + std::to_string(pyr->size()) +
                               " levels, need " + std::to_string(kBlocks));
        x = edfpm::inject((*pyr)[k], x, b.inject);
      }
      check_finite(x, ch.modality, k);
      x = nn::max_pool2(x);
    }
    out.push_back(x);
  }
  return out;
}

} // namespace ual::encoder
