#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ual/encoder.hpp"
#include "ual/fsc.hpp"
#include "ual/heads.hpp"
#include "ual/model_config.hpp"
#include "ual/mprgd.hpp"
#include "ual/phantom.hpp"

namespace ual {

/// Every trainable tensor of the framework, split into the three update
/// groups: theta_seg (encoder, FSC, decoder), theta_dec (detection head),
/// theta_dis (discriminator).
struct Network {
  ModelConfig cfg;
  nn::ParamList theta_seg, theta_dec, theta_dis;
  encoder::Encoder enc;
  std::optional<fsc::FscParams> fsc;
  std::optional<fsc::ConcatParams> concat; // used when the FSC is ablated
  heads::SegDecoder decoder;
  heads::DetHead det;
  std::optional<mprgd::Discriminator> dis; // absent when MPRG-D is ablated

  /// All parameters, seg then dec then dis, for checkpointing.
  [[nodiscard]] nn::ParamList all_params() const;
};

/// Each component draws from its own stream derived from `seed`, so
/// ablating one component leaves the others' initial weights unchanged.
Network make_network(const ModelConfig &cfg, std::uint64_t seed);

/// Batched NCMRI inputs for the active modalities.
struct NetInput {
  std::vector<nn::Tensor> images;                 // per channel [N,1,H,W]
  std::vector<std::vector<nn::Tensor>> pyramids;  // per channel, empty without injection
  int batch = 0, height = 0, width = 0;
};

/// Per-sample encoder inputs, computed once and reused across steps.
struct SampleInput {
  std::vector<std::vector<nn::Real>> images;               // per channel, H*W
  std::vector<std::vector<std::vector<nn::Real>>> pyramid; // per channel, per level
  int height = 0, width = 0;
};

/// Reads only the NCMRI planes of the active modalities. Throws DataError
/// when one is missing or has the wrong size.
SampleInput prepare_input(const Sample &s, const ModelConfig &cfg);
NetInput batch_input(const std::vector<const SampleInput *> &items);

struct Forward {
  std::vector<nn::Tensor> stacks; // encoder output per channel
  nn::Tensor f_seg, f_dec;
  nn::Tensor seg_logits; // [N,1,H,W]
  heads::DetOutput det;
};

/// Stages 1-2: encoder, fusion, segmentation decoder and detection head.
Forward forward(const Network &net, const NetInput &in);

/// Testing path on one sample: no CEMRI, no discriminator.
std::pair<heads::SegPrediction, heads::DetPrediction> infer(const Sample &s, const Network &net);

} // namespace ual
