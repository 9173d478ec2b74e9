#pragma once

#include <string>
#include <vector>

#include "ual/cswp.hpp"
#include "ual/phantom.hpp"

namespace ual {

/// true = component enabled.
struct Components {
  bool edfpm = true;
  bool fsc = true;
  bool cswp = true;
  bool mpr = true;
  bool mprgd = true;

  bool operator==(const Components &) const = default;
};

/// Parses an ablation name (edfpm, fsc, cswp, mpr, mprgd) and switches that
/// component off. Throws ConfigError for unknown names.
void ablate(Components &c, const std::string &name);
/// Comma-separated names of disabled components, "" when all are on.
std::string ablation_string(const Components &c);

struct ModelConfig {
  int base_channels = 64; // encoder widths 64/128/256/512 at the default
  std::vector<Modality> modalities{kAllModalities.begin(), kAllModalities.end()};
  std::vector<Phase> phases{kAllPhases.begin(), kAllPhases.end()};
  Components components;
  cswp::WindowMode cswp_mode = cswp::WindowMode::Soft;
  double cswp_sharpness = 4.0;

  [[nodiscard]] bool has(Modality m) const;
  /// Radiomics vector length fed to the discriminator, 0 when MPR is off.
  [[nodiscard]] int mpr_length() const;
  /// Throws ConfigError when the combo is empty, duplicated or width < 1.
  void validate() const;
};

/// "t1,t2,dwi" -> modalities in canonical order; throws ConfigError.
std::vector<Modality> parse_modalities(const std::string &csv);
std::vector<Phase> parse_phases(const std::string &csv);
std::string join_modalities(const std::vector<Modality> &ms, char sep = ',');
std::string join_phases(const std::vector<Phase> &ps, char sep = ',');

} // namespace ual
