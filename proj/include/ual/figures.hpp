#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "ual/grid.hpp"

namespace ual::figures {

struct RgbImage {
  int width = 0, height = 0;
  std::vector<std::uint8_t> pixels; // RGB, row-major

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

/// Grayscale modality upscaled by `scale` with the predicted mask boundary
/// (red), the ground-truth boundary (green, when given) and the predicted
/// box (yellow, when given).
RgbImage overlay(const Grid &image, const Grid &pred_mask, const Grid *gt_mask,
                 const std::optional<BoxTuple> &pred_box, int scale = 4);

/// Probabilities in [0,1] through a blue-cyan-yellow-red ramp.
RgbImage heatmap(const Grid &probs, int scale = 4);

/// 8-bit RGB PNG. Throws DataError when the file cannot be written.
void write_png(const std::filesystem::path &path, const RgbImage &img);

} // namespace ual::figures
