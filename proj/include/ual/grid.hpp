#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace ual {

/// Dense 2-D image plane, row-major.
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<float> values;

  Grid() = default;
  Grid(int h, int w, float fill = 0.0F)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

  [[nodiscard]] bool empty() const { return values.empty(); }
  [[nodiscard]] std::size_t size() const { return values.size(); }

  float &at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
  [[nodiscard]] float at(int r, int c) const {
    return values[static_cast<std::size_t>(r) * width + c];
  }

  [[nodiscard]] Grid transposed() const {
    Grid t(width, height);
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        t.at(c, r) = at(r, c);
    return t;
  }

  bool operator==(const Grid &) const = default;
};

/// Square bounding box in pixel coordinates. The box covers
/// [cx - side/2, cx + side/2) horizontally and likewise vertically.
struct BoxTuple {
  double cx = 0.0;
  double cy = 0.0;
  double side = 1.0;

  bool operator==(const BoxTuple &) const = default;
};

/// Half-up rounding used for every pixel-snapping decision.
inline long round_half_up(double v) { return static_cast<long>(std::floor(v + 0.5)); }

} // namespace ual
