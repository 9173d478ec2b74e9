#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "ual/grid.hpp"
#include "ual/nn/tensor.hpp"
#include "ual/phantom.hpp"

// Edge-dissimilarity feature pyramid: Sobel edge maps of two modalities are
// subtracted, downsampled into a pyramid, and added into the encoder's
// feature maps through a 1x1 projection.
namespace ual::edfpm {

/// Gradient magnitude with 3x3 Sobel kernels, reflect-101 borders.
/// Throws DimensionError for images smaller than 3x3.
Grid sobel_edges(const Grid &img);

/// Signed element-wise edge_m - edge_n.
Grid edge_dissimilarity(const Grid &edge_m, const Grid &edge_n);

/// 2x downsample: each output pixel is the mean of its aligned 2x2 block
/// (bilinear at scale 1/2 with half-pixel centres).
Grid downsample2(const Grid &g);

struct EdgePyramid {
  std::vector<Grid> levels;
  std::pair<Modality, Modality> source_pair{Modality::T1, Modality::T2};
};

/// Level 0 is `dmap`; H and W must be divisible by 2^(levels-1).
EdgePyramid build_pyramid(const Grid &dmap, int levels);

struct InjectionParams {
  nn::Tensor weight; // [C,1,1,1]
  nn::Tensor bias;   // [C] or undefined
};

/// Lifts a 1-channel map [N,1,h,w] to feat's channel count with a 1x1 conv
/// and adds it to feat [N,C,h,w].
nn::Tensor inject(const nn::Tensor &pyr_level, const nn::Tensor &feat,
                  const InjectionParams &params);

/// Which modality pair feeds the channel of `target`, given the active
/// modalities: with all three, the two others; with two, the present pair;
/// with one, none.
std::optional<std::pair<Modality, Modality>> source_pair_for(Modality target,
                                                             const std::vector<Modality> &active);

/// Pyramid for `target` built from a sample's images, or nullopt when the
/// combo gives it no pair.
std::optional<EdgePyramid> pyramid_for(const Sample &sample, Modality target,
                                       const std::vector<Modality> &active, int levels);

} // namespace ual::edfpm
