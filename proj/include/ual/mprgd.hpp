#pragma once

#include <optional>
#include <random>
#include <vector>

#include "ual/grid.hpp"
#include "ual/nn/params.hpp"

namespace ual::mprgd {

/// Three 3x3 conv blocks (b, 2b, 4b channels, each ReLU + 2x2 max-pool) on a
/// 64x64 canvas, flatten, concat the radiomics vector, FC(4b) -> ReLU -> FC(1).
struct Discriminator {
  std::vector<nn::Tensor> conv_w, conv_b;
  nn::Tensor fc1_w, fc1_b, fc2_w, fc2_b;
  int mpr_length = 0;
};

/// Flattened conv width for a 64x64 canvas: 4b * 8 * 8.
int conv_feature_width(int base);

/// Registers "dis/conv{1,2,3}/{w,b}" and "dis/fc{1,2}/{w,b}".
Discriminator make_discriminator(int base, int mpr_length, nn::ParamList &params,
                                 std::mt19937_64 &rng);

/// canvas [N,1,64,64], mpr [N,mpr_length] (undefined when mpr_length is 0)
/// -> logits [N,1]. Throws NumericError on non-finite activations.
nn::Tensor discriminate_logits(const nn::Tensor &canvas, const nn::Tensor &mpr,
                               const Discriminator &d);

/// Score in [0,1] for one canvas. Throws DomainError for canvas values
/// outside [0,2], DimensionError for a wrong mpr length.
double discriminate(const Grid &canvas, const std::optional<std::vector<double>> &mpr,
                    const Discriminator &d);

} // namespace ual::mprgd
