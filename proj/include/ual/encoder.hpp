#pragma once

#include <random>
#include <string>
#include <vector>

#include "ual/edfpm.hpp"
#include "ual/model_config.hpp"
#include "ual/nn/params.hpp"

namespace ual::encoder {

inline constexpr int kBlocks = 4;

/// Output channels of block k (0-based): base * 2^k.
int block_channels(int base, int block);

struct Block {
  nn::Tensor weight; // [Co,Ci,3,3]
  nn::Tensor bias;   // [Co]
  edfpm::InjectionParams inject; // weight undefined when the block has no injection
};

/// One convolution channel per active modality.
struct Channel {
  Modality modality = Modality::T1;
  std::vector<Block> blocks;
};

struct Encoder {
  std::vector<Channel> channels; // active modalities in t1, t2, dwi order
};

/// Registers the encoder's parameters ("enc/<mod>/conv<k>/{w,b}" then
/// "enc/<mod>/edfpm<k>/w"). Conv weights are drawn before any injection
/// weight, so toggling EDFPM leaves the conv initialisation unchanged.
Encoder make_encoder(const ModelConfig &cfg, nn::ParamList &params, std::mt19937_64 &rng);

/// images[i]: [N,1,H,W] for channel i. pyramids[i]: kBlocks levels
/// [N,1,H/2^k,W/2^k], or empty for a channel without injection.
/// Returns per-channel stacks [N, 8*base, H/16, W/16].
/// Throws DimensionError for sizes not divisible by 16, NumericError on a
/// non-finite activation.
std::vector<nn::Tensor> encode(const Encoder &enc, const std::vector<nn::Tensor> &images,
                               const std::vector<std::vector<nn::Tensor>> &pyramids);

} // namespace ual::encoder
