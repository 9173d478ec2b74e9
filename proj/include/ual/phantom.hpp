#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ual/grid.hpp"

namespace ual {

enum class Modality { T1 = 0, T2 = 1, Dwi = 2 };
enum class Phase { Arterial = 0, PortalVenous = 1, Delay = 2 };

inline constexpr std::array<Modality, 3> kAllModalities = {Modality::T1, Modality::T2,
                                                           Modality::Dwi};
inline constexpr std::array<Phase, 3> kAllPhases = {Phase::Arterial, Phase::PortalVenous,
                                                    Phase::Delay};

const char *modality_name(Modality m); // "t1", "t2", "dwi"
const char *phase_name(Phase p);       // "a", "pv", "delay"

/// Tumor class label: 0 no tumor, 1 hemangioma, 2 HCC.
inline constexpr int kNumClasses = 3;

/// One training/testing unit. Grids share dimensions, intensities in [0,1].
/// cls == 0 <=> mask all-zero <=> box absent.
struct Sample {
  std::string id;
  Grid t1, t2, dwi;
  Grid ce_arterial, ce_pv, ce_delay;
  Grid mask;
  std::optional<BoxTuple> box;
  int cls = 0;

  [[nodiscard]] const Grid &modality(Modality m) const;
  [[nodiscard]] const Grid &phase(Phase p) const;
  [[nodiscard]] int height() const { return mask.height; }
  [[nodiscard]] int width() const { return mask.width; }

  bool operator==(const Sample &) const = default;
};

struct CorpusSpec {
  std::uint64_t seed = 7;
  int count = 32;
  int height = 64;
  int width = 64;
  std::array<double, 3> class_mix = {0.2, 0.4, 0.4};
};

/// Per-class sample counts: round(count * fraction), remainder absorbed by the
/// largest fraction.
std::array<int, 3> class_counts(int count, const std::array<double, 3> &mix);

/// Deterministic synthetic corpus of elliptical tumors on smoothed-noise
/// backgrounds. Throws ConfigError on bad arguments.
std::vector<Sample> generate_corpus(const CorpusSpec &spec);

/// Smallest enclosing square of the mask's positive pixels, centred on the
/// bounding extents; nullopt for an all-zero mask.
std::optional<BoxTuple> enclosing_square(const Grid &mask);

// On-disk layout: <dir>/{t1,t2,dwi,ce_a,ce_pv,ce_d,mask}.uald + meta.json
void write_sample(const Sample &sample, const std::filesystem::path &dir);
Sample read_sample(const std::filesystem::path &dir);

/// Writes each sample to <root>/<sample_id>/.
void write_corpus(const std::vector<Sample> &samples, const std::filesystem::path &root);
/// Reads every sample directory under root, ordered by name.
std::vector<Sample> read_corpus(const std::filesystem::path &root);

} // namespace ual
