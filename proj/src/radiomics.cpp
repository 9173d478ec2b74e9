#include "ual/radiomics.hpp"

#include <algorithm>
#include <cmath>

#include "ual/cswp.hpp"
#include "ual/errors.hpp"

namespace ual::radiomics {

FirstOrder first_order(std::span<const double> region) {
  if (region.empty())
    throw RegionError("first_order: empty region");
  const double n = static_cast<double>(region.size());
  double sum = 0, energy = 0;
  double lo = region[0], hi = region[0];
  for (double x : region) {
    sum += x;
    energy += x * x;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double mean = sum / n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : region) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  double skew = 0, kurt = 0;
  if (m2 > 0) {
    skew = m3 / std::pow(m2, 1.5);
    kurt = m4 / (m2 * m2);
  }

  std::array<double, kHistogramBins> hist{};
  const double width = hi - lo;
  for (double x : region) {
    int b = width > 0 ? static_cast<int>((x - lo) / width * kHistogramBins) : 0;
    hist[std::clamp(b, 0, kHistogramBins - 1)] += 1;
  }
  double entropy = 0;
  for (double c : hist)
    if (c > 0) {
      const double p = c / n;
      entropy -= p * std::log2(p);
    }
  return {mean, m2, skew, kurt, lo, hi, energy, entropy};
}

std::vector<double> glcm_matrix(const Grid &image, const Grid &mask, int levels, Offset offset) {
  if (image.height != mask.height || image.width != mask.width)
    throw DimensionError("glcm: image and mask shapes differ");
  if (levels < 1)
    throw DomainError("glcm: levels must be >= 1");
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < image.size(); ++i)
    if (mask.values[i] > 0.5F) {
      lo = std::min(lo, static_cast<double>(image.values[i]));
      hi = std::max(hi, static_cast<double>(image.values[i]));
    }
  auto quantise = [&](float v) {
    if (hi <= lo)
      return 0;
    const int b = static_cast<int>((v - lo) / (hi - lo) * levels);
    return std::clamp(b, 0, levels - 1);
  };
  std::vector<double> p(static_cast<std::size_t>(levels) * levels, 0.0);
  double total = 0;
  for (int r = 0; r < image.height; ++r)
    for (int c = 0; c < image.width; ++c) {
      const int r2 = r + offset.dy, c2 = c + offset.dx;
      if (r2 < 0 || r2 >= image.height || c2 < 0 || c2 >= image.width)
        continue;
      if (mask.at(r, c) <= 0.5F || mask.at(r2, c2) <= 0.5F)
        continue;
      const int i = quantise(image.at(r, c)), j = quantise(image.at(r2, c2));
      p[static_cast<std::size_t>(i) * levels + j] += 1;
      p[static_cast<std::size_t>(j) * levels + i] += 1;
      total += 2;
    }
  if (total == 0)
    throw RegionError("glcm: no valid in-mask pixel pair at offset (" +
                      std::to_string(offset.dx) + "," + std::to_string(offset.dy) + ")");
  for (auto &v : p)
    v /= total;
  return p;
}

GlcmFeatures glcm_features_from_matrix(std::span<const double> p, int levels) {
  double mu_i = 0, mu_j = 0;
  for (int i = 0; i < levels; ++i)
    for (int j = 0; j < levels; ++j) {
      const double v = p[static_cast<std::size_t>(i) * levels + j];
      mu_i += i * v;
      mu_j += j * v;
    }
  double var_i = 0, var_j = 0, cov = 0, contrast = 0, energy = 0, homog = 0, entropy = 0;
  for (int i = 0; i < levels; ++i)
    for (int j = 0; j < levels; ++j) {
      const double v = p[static_cast<std::size_t>(i) * levels + j];
      if (v == 0)
        continue;
      const double d = i - j;
      var_i += (i - mu_i) * (i - mu_i) * v;
      var_j += (j - mu_j) * (j - mu_j) * v;
      cov += (i - mu_i) * (j - mu_j) * v;
      contrast += d * d * v;
      energy += v * v;
      homog += v / (1.0 + d * d);
      entropy -= v * std::log2(v);
    }
  const double corr = (var_i > 0 && var_j > 0) ? cov / std::sqrt(var_i * var_j) : 0.0;
  return {contrast, corr, energy, homog, entropy};
}

GlcmFeatures glcm_features(const Grid &image, const Grid &mask, int levels, Offset offset) {
  return glcm_features_from_matrix(glcm_matrix(image, mask, levels, offset), levels);
}

std::vector<std::string> feature_names(const std::vector<Phase> &phases) {
  static const std::array<const char *, kPerPhase> base = {
      "mean",          "variance",         "skewness",    "kurtosis",
      "min",           "max",              "energy",      "entropy",
      "glcm_contrast", "glcm_correlation", "glcm_energy", "glcm_homogeneity",
      "glcm_entropy"};
  std::vector<std::string> out;
  for (auto ph : phases)
    for (const char *b : base)
      out.push_back(std::string(phase_name(ph)) + "_" + b);
  return out;
}

Normalizer Normalizer::fit(const std::vector<std::vector<double>> &rows) {
  Normalizer nz;
  if (rows.empty())
    return nz;
  const std::size_t len = rows.front().size();
  nz.mean.assign(len, 0.0);
  nz.stddev.assign(len, 0.0);
  for (const auto &r : rows)
    for (std::size_t i = 0; i < len; ++i)
      nz.mean[i] += r[i];
  for (auto &m : nz.mean)
    m /= static_cast<double>(rows.size());
  for (const auto &r : rows)
    for (std::size_t i = 0; i < len; ++i)
      nz.stddev[i] += (r[i] - nz.mean[i]) * (r[i] - nz.mean[i]);
  for (auto &s : nz.stddev) {
    s = std::sqrt(s / static_cast<double>(rows.size()));
    if (!(s > 1e-12))
      s = 1.0;
  }
  return nz;
}

void Normalizer::apply(std::vector<double> &v) const {
  if (empty())
    return;
  if (v.size() != mean.size())
    throw DimensionError("radiomics normalizer: vector length " + std::to_string(v.size()) +
                         " vs " + std::to_string(mean.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = (v[i] - mean[i]) / stddev[i];
}

std::vector<double> region_features(const Grid &region, const std::vector<const Grid *> &phases) {
  std::vector<double> out;
  out.reserve(phases.size() * kPerPhase);
  for (const Grid *ph : phases) {
    if (ph->height != region.height || ph->width != region.width)
      throw DimensionError("radiomics: phase and region shapes differ");
    std::vector<double> vals;
    for (std::size_t i = 0; i < region.size(); ++i)
      if (region.values[i] > 0.5F)
        vals.push_back(ph->values[i]);
    const auto fo = first_order(vals);
    out.insert(out.end(), fo.begin(), fo.end());
    GlcmFeatures gl{};
    try {
      gl = glcm_features(*ph, region);
    } catch (const RegionError &) {
      // single-pixel or pairless regions carry no texture
    }
    out.insert(out.end(), gl.begin(), gl.end());
  }
  return out;
}

namespace {

MprVector finish(const Grid &region, bool any, const std::vector<const Grid *> &phases,
                 const Normalizer *normalizer) {
  MprVector mv;
  if (phases.empty())
    throw ConfigError("extract_mpr: no phases configured");
  if (!any) {
    mv.values.assign(phases.size() * kPerPhase, 0.0);
    mv.empty_region = true;
    return mv;
  }
  mv.values = region_features(region, phases);
  if (normalizer)
    normalizer->apply(mv.values);
  return mv;
}

} // namespace

MprVector extract_mpr(const Grid &canvas, const std::vector<const Grid *> &phases,
                      const BoxTuple &box, const Normalizer *normalizer) {
  if (canvas.height != cswp::kCanvasSize || canvas.width != cswp::kCanvasSize)
    throw DimensionError("extract_mpr: canvas must be 64x64");
  if (phases.empty())
    throw ConfigError("extract_mpr: no phases configured");
  const int h = phases.front()->height, w = phases.front()->width;
  const auto g = cswp::window_geometry(box);
  Grid region(h, w);
  bool any = false;
  for (int u = 0; u < g.side; ++u)
    for (int v = 0; v < g.side; ++v) {
      const float val = canvas.at(g.canvas_start + u, g.canvas_start + v);
      if (!(val >= 0.5F) || val == cswp::kPadValue)
        continue;
      const long r = g.origin_row + u, c = g.origin_col + v;
      if (r < 0 || r >= h || c < 0 || c >= w)
        continue;
      region.at(static_cast<int>(r), static_cast<int>(c)) = 1.0F;
      any = true;
    }
  return finish(region, any, phases, normalizer);
}

MprVector extract_mpr_full(const Grid &region_map, const std::vector<const Grid *> &phases,
                           const Normalizer *normalizer) {
  Grid region(region_map.height, region_map.width);
  bool any = false;
  for (std::size_t i = 0; i < region.size(); ++i)
    if (region_map.values[i] >= 0.5F) {
      region.values[i] = 1.0F;
      any = true;
    }
  return finish(region, any, phases, normalizer);
}

} // namespace ual::radiomics
