#pragma once

#include "ual/grid.hpp"
#include "ual/nn/tensor.hpp"

// Coordinate sharing with padding: a mask and a square box become one
// 64x64 canvas whose out-of-box region holds the sentinel value 2.
namespace ual::cswp {

inline constexpr int kCanvasSize = 64;
inline constexpr float kPadValue = 2.0F;

/// Pixel geometry of a box's window. Image rows
/// [origin_row, origin_row + side) land on canvas rows
/// [canvas_start, canvas_start + side); likewise for columns.
struct WindowGeometry {
  int side = 0;
  long origin_row = 0;
  long origin_col = 0;
  int canvas_start = 0;
  bool clamped = false; // side exceeded the canvas and was clamped to 64
};

/// side is rounded half-up and clamped to [1, 64]; origin is the half-up
/// rounding of centre - side/2.
WindowGeometry window_geometry(const BoxTuple &box);

struct IntegrationCanvas {
  Grid values; // 64x64 over {0,1,2}
  double cx = 0.0;
  double cy = 0.0;
  double side = 0.0;
};

/// Crops the binary mask under the box (zero-extended beyond the image) into
/// the centre of a canvas prefilled with 2. Throws DomainError for
/// non-binary masks or a box centre outside the image.
IntegrationCanvas integrate(const Grid &mask, const BoxTuple &box);

enum class WindowMode {
  Hard, // same crop as integrate(); gradient reaches the probabilities only
  Soft, // bilinear sampling + product-of-logistics window; box is differentiable
};

struct SoftOptions {
  WindowMode mode = WindowMode::Soft;
  double sharpness = 4.0; // logistic slope of the soft window edge, per pixel
};

/// Differentiable canvas from probabilities [N,1,H,W] and boxes [N,3]
/// holding (cx, cy, side) in pixels. Output [N,1,64,64].
nn::Tensor integrate_soft(const nn::Tensor &probs, const nn::Tensor &boxes,
                          const SoftOptions &options);

/// Single-image convenience over the tensor op. Throws DomainError for
/// probabilities outside [0,1].
Grid integrate_soft(const Grid &probs, const BoxTuple &box, const SoftOptions &options);

} // namespace ual::cswp
