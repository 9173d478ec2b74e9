#include "ual/edfpm.hpp"

#include <algorithm>
#include <cmath>

#include "ual/errors.hpp"
#include "ual/nn/ops.hpp"

namespace ual::edfpm {
namespace {

int reflect101(int i, int n) {
  if (i < 0)
    return -i;
  if (i >= n)
    return 2 * n - 2 - i;
  return i;
}

void require_same_shape(const Grid &a, const Grid &b, const char *what) {
  if (a.height != b.height || a.width != b.width)
    throw DimensionError(std::string(what) + ": shape mismatch " + std::to_string(a.height) +
                         "x" + std::to_string(a.width) + " vs " + std::to_string(b.height) +
                         "x" + std::to_string(b.width));
}

} // namespace

Grid sobel_edges(const Grid &img) {
  if (img.height < 3 || img.width < 3)
    throw DimensionError("sobel_edges: image " + std::to_string(img.height) + "x" +
                         std::to_string(img.width) + " is smaller than the 3x3 kernel");
  static constexpr int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  Grid out(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      double gx = 0, gy = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const double v = img.at(reflect101(r + dr, img.height), reflect101(c + dc, img.width));
          gx += kx[dr + 1][dc + 1] * v;
          gy += kx[dc + 1][dr + 1] * v;
        }
      out.at(r, c) = static_cast<float>(std::sqrt(gx * gx + gy * gy));
    }
  return out;
}

Grid edge_dissimilarity(const Grid &edge_m, const Grid &edge_n) {
  require_same_shape(edge_m, edge_n, "edge_dissimilarity");
  Grid out(edge_m.height, edge_m.width);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.values[i] = edge_m.values[i] - edge_n.values[i];
  return out;
}

Grid downsample2(const Grid &g) {
  if (g.height % 2 || g.width % 2)
    throw DimensionError("downsample2: odd size " + std::to_string(g.height) + "x" +
                         std::to_string(g.width));
  Grid out(g.height / 2, g.width / 2);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c)
      out.at(r, c) = 0.25F * (g.at(2 * r, 2 * c) + g.at(2 * r, 2 * c + 1) +
                              g.at(2 * r + 1, 2 * c) + g.at(2 * r + 1, 2 * c + 1));
  return out;
}

EdgePyramid build_pyramid(const Grid &dmap, int levels) {
  if (levels < 1)
    throw DimensionError("build_pyramid: levels must be >= 1");
  const int div = 1 << (levels - 1);
  if (dmap.height % div || dmap.width % div || dmap.height < div || dmap.width < div)
    throw DimensionError("build_pyramid: " + std::to_string(dmap.height) + "x" +
                         std::to_string(dmap.width) + " not divisible by " +
                         std::to_string(div) + " (2^(levels-1)) for " +
                         std::to_string(levels) + " levels");
  EdgePyramid pyr;
  pyr.levels.push_back(dmap);
  for (int k = 1; k < levels; ++k)
    pyr.levels.push_back(downsample2(pyr.levels.back()));
  return pyr;
}

nn::Tensor inject(const nn::Tensor &pyr_level, const nn::Tensor &feat,
                  const InjectionParams &params) {
  if (pyr_level.rank() != 4 || feat.rank() != 4 || pyr_level.dim(1) != 1 ||
      pyr_level.dim(0) != feat.dim(0) || pyr_level.dim(2) != feat.dim(2) ||
      pyr_level.dim(3) != feat.dim(3))
    throw DimensionError("inject: pyramid level " + nn::shape_str(pyr_level.shape()) +
                         " does not match features " + nn::shape_str(feat.shape()));
  return nn::add(feat, nn::conv2d(pyr_level, params.weight, params.bias, 0));
}

std::optional<std::pair<Modality, Modality>> source_pair_for(Modality target,
                                                             const std::vector<Modality> &active) {
  std::vector<Modality> sorted = active;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() == 3) {
    std::vector<Modality> others;
    for (auto m : sorted)
      if (m != target)
        others.push_back(m);
    return std::make_pair(others[0], others[1]);
  }
  if (sorted.size() == 2)
    return std::make_pair(sorted[0], sorted[1]);
  return std::nullopt;
}

std::optional<EdgePyramid> pyramid_for(const Sample &sample, Modality target,
                                       const std::vector<Modality> &active, int levels) {
  auto pair = source_pair_for(target, active);
  if (!pair)
    return std::nullopt;
  auto dmap = edge_dissimilarity(sobel_edges(sample.modality(pair->first)),
                                 sobel_edges(sample.modality(pair->second)));
  auto pyr = build_pyramid(dmap, levels);
  pyr.source_pair = *pair;
  return pyr;
}

} // namespace ual::edfpm
