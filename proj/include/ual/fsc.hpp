#pragma once

#include <random>
#include <string>
#include <vector>

#include "ual/nn/params.hpp"

namespace ual::fsc {

/// Gate convolutions (a, b) and task branches (c: segmentation, d: detection).
/// Kernel size is read from the weight shape; padding keeps spatial dims.
struct FscParams {
  nn::Tensor w_a, b_a, w_b, b_b, w_c, b_c, w_d, b_d;
};

/// Replacement used when the FSC is ablated: one conv + ReLU on the concat.
struct ConcatParams {
  nn::Tensor w_s, b_s;
};

struct FscOutput {
  nn::Tensor f_a;   // fused gate output, in (-1, 1)
  nn::Tensor f_seg; // T1-boosted
  nn::Tensor f_dec; // DWI-boosted
};

/// Registers "fsc/{a,b,c,d}/{w,b}" for `inputs` stacks of `channels` each.
/// Without a T1 (DWI) stack the c (d) branch consumes F_a alone.
FscParams make_fsc(int channels, int inputs, bool has_t1, bool has_dwi, nn::ParamList &params,
                   std::mt19937_64 &rng, int kernel = 3);
ConcatParams make_concat(int channels, int inputs, nn::ParamList &params, std::mt19937_64 &rng,
                         int kernel = 3);

/// F_a = tanh(conv_b(ReLU(conv_a(concat(stacks)))));
/// F_Seg = ReLU(conv_c(concat(F_a, stacks[t1]))); F_Dec = ReLU(conv_d(concat(F_a, stacks[dwi]))).
/// t1 / dwi are indices into `stacks`, or -1 when that modality is inactive.
FscOutput fuse(const std::vector<nn::Tensor> &stacks, int t1, int dwi, const FscParams &p);
/// All three modalities present.
FscOutput fuse(const nn::Tensor &f_t1, const nn::Tensor &f_t2, const nn::Tensor &f_d,
               const FscParams &p);

/// F^s = ReLU(conv_s(concat(stacks))).
nn::Tensor fuse_ablated(const std::vector<nn::Tensor> &stacks, const ConcatParams &p);

} // namespace ual::fsc
