#include "ual/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "ual/errors.hpp"

namespace ual::figures {

void RgbImage::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height)
    return;
  auto *p = &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

namespace {

bool on(const Grid &m, int r, int c) {
  return r >= 0 && c >= 0 && r < m.height && c < m.width && m.at(r, c) >= 0.5F;
}

// Pixels inside the mask with a 4-neighbour outside it.
bool boundary(const Grid &m, int r, int c) {
  return on(m, r, c) &&
         (!on(m, r - 1, c) || !on(m, r + 1, c) || !on(m, r, c - 1) || !on(m, r, c + 1));
}

void paint_cell(RgbImage &img, int r, int c, int scale, std::uint8_t R, std::uint8_t G,
                std::uint8_t B) {
  for (int dy = 0; dy < scale; ++dy)
    for (int dx = 0; dx < scale; ++dx)
      img.set(c * scale + dx, r * scale + dy, R, G, B);
}

} // namespace

RgbImage overlay(const Grid &image, const Grid &pred_mask, const Grid *gt_mask,
                 const std::optional<BoxTuple> &pred_box, int scale) {
  if (pred_mask.height != image.height || pred_mask.width != image.width ||
      (gt_mask && (gt_mask->height != image.height || gt_mask->width != image.width)))
    throw DimensionError("overlay: image and mask sizes differ");
  RgbImage img(image.width * scale, image.height * scale);
  for (int r = 0; r < image.height; ++r)
    for (int c = 0; c < image.width; ++c) {
      const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(image.at(r, c), 0.0F, 1.0F) * 255));
      paint_cell(img, r, c, scale, v, v, v);
    }
  for (int r = 0; r < image.height; ++r)
    for (int c = 0; c < image.width; ++c) {
      if (gt_mask && boundary(*gt_mask, r, c))
        paint_cell(img, r, c, scale, 40, 220, 60);
      if (boundary(pred_mask, r, c))
        paint_cell(img, r, c, scale, 230, 40, 40);
    }
  if (pred_box) {
    const int x0 = static_cast<int>(std::lround((pred_box->cx - pred_box->side / 2) * scale));
    const int y0 = static_cast<int>(std::lround((pred_box->cy - pred_box->side / 2) * scale));
    const int s = static_cast<int>(std::lround(pred_box->side * scale));
    for (int t = 0; t <= s; ++t) {
      img.set(x0 + t, y0, 250, 220, 30);
      img.set(x0 + t, y0 + s, 250, 220, 30);
      img.set(x0, y0 + t, 250, 220, 30);
      img.set(x0 + s, y0 + t, 250, 220, 30);
    }
  }
  return img;
}

RgbImage heatmap(const Grid &probs, int scale) {
  // piecewise-linear ramp through blue, cyan, yellow, red
  static constexpr double stops[4][3] = {{0, 0, 160}, {0, 200, 230}, {250, 230, 0}, {220, 20, 20}};
  RgbImage img(probs.width * scale, probs.height * scale);
  for (int r = 0; r < probs.height; ++r)
    for (int c = 0; c < probs.width; ++c) {
      const double p = std::clamp(static_cast<double>(probs.at(r, c)), 0.0, 1.0) * 3.0;
      const int i = std::min(2, static_cast<int>(p));
      const double f = p - i;
      std::uint8_t rgb[3];
      for (int k = 0; k < 3; ++k)
        rgb[k] = static_cast<std::uint8_t>(std::lround(stops[i][k] * (1 - f) + stops[i + 1][k] * f));
      paint_cell(img, r, c, scale, rgb[0], rgb[1], rgb[2]);
    }
  return img;
}

void write_png(const std::filesystem::path &path, const RgbImage &img) {
  std::unique_ptr<FILE, int (*)(FILE *)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp)
    throw DataError(path.string() + ": cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError(path.string() + ": libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError(path.string() + ": PNG encoding failed");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y)
    png_write_row(png, img.pixels.data() + static_cast<std::size_t>(y) * img.width * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

} // namespace ual::figures
