#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "ual/grid.hpp"
#include "ual/phantom.hpp"

// Multi-phase radiomics: first-order statistics and GLCM texture of the
// CEMRI phases inside the tumour region. Feature order per phase is fixed:
//   mean, variance, skewness, kurtosis, min, max, energy, entropy,
//   glcm_contrast, glcm_correlation, glcm_energy, glcm_homogeneity, glcm_entropy
// Phases are concatenated in arterial, portal-venous, delay order.
namespace ual::radiomics {

inline constexpr int kFirstOrderCount = 8;
inline constexpr int kGlcmCount = 5;
inline constexpr int kPerPhase = kFirstOrderCount + kGlcmCount;
inline constexpr int kHistogramBins = 32;
inline constexpr int kDefaultGlcmLevels = 16;

using FirstOrder = std::array<double, kFirstOrderCount>;
using GlcmFeatures = std::array<double, kGlcmCount>;

/// (mean, variance, skewness, kurtosis, min, max, energy, entropy).
/// Variance is the population variance, kurtosis is m4/m2^2, skewness and
/// kurtosis are 0 for zero variance. Entropy in bits over a 32-bin
/// histogram spanning [min, max]. Throws RegionError on an empty region.
FirstOrder first_order(std::span<const double> region);

struct Offset {
  int dx = 1;
  int dy = 0;
};

/// Symmetric normalised co-occurrence matrix, levels x levels row-major.
/// Intensities under the mask are quantised into `levels` equal-width bins
/// over the region's min-max. Throws RegionError when no in-mask pair exists.
std::vector<double> glcm_matrix(const Grid &image, const Grid &mask, int levels, Offset offset);

/// (contrast, correlation, energy, homogeneity, entropy) of a normalised
/// GLCM. Homogeneity uses 1/(1+(i-j)^2); correlation is 0 for zero variance.
GlcmFeatures glcm_features_from_matrix(std::span<const double> p, int levels);

GlcmFeatures glcm_features(const Grid &image, const Grid &mask,
                           int levels = kDefaultGlcmLevels, Offset offset = {});

/// Feature names for a phase combo, in vector order.
std::vector<std::string> feature_names(const std::vector<Phase> &phases);

/// Per-feature z-normalisation statistics.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  [[nodiscard]] bool empty() const { return mean.empty(); }
  /// Fits from raw vectors; zero spread maps to stddev 1.
  static Normalizer fit(const std::vector<std::vector<double>> &rows);
  void apply(std::vector<double> &v) const;
};

struct MprVector {
  std::vector<double> values;
  bool empty_region = false;
};

/// Region = cells of the box window whose canvas value is >= 0.5 and != 2,
/// mapped back to image coordinates through the box. Empty regions give the
/// all-zero vector with empty_region set. GLCM terms fall back to zero when
/// the region has no in-mask pair.
MprVector extract_mpr(const Grid &canvas, const std::vector<const Grid *> &phases,
                      const BoxTuple &box, const Normalizer *normalizer = nullptr);

/// Same features over a full-resolution probability/mask grid (value >= 0.5),
/// used when coordinate sharing is ablated.
MprVector extract_mpr_full(const Grid &region_map, const std::vector<const Grid *> &phases,
                           const Normalizer *normalizer = nullptr);

/// Raw (unnormalised) features of a binary region mask over the phases.
std::vector<double> region_features(const Grid &region, const std::vector<const Grid *> &phases);

} // namespace ual::radiomics
