#include "ual/model_config.hpp"

#include <algorithm>
#include <sstream>

#include "ual/errors.hpp"
#include "ual/radiomics.hpp"

namespace ual {

void ablate(Components &c, const std::string &name) {
  if (name == "edfpm")
    c.edfpm = false;
  else if (name == "fsc")
    c.fsc = false;
  else if (name == "cswp")
    c.cswp = false;
  else if (name == "mpr")
    c.mpr = false;
  else if (name == "mprgd")
    c.mprgd = false;
  else
    throw ConfigError("unknown ablation '" + name + "' (expected edfpm, fsc, cswp, mpr or mprgd)");
}

std::string ablation_string(const Components &c) {
  std::string out;
  auto add = [&](bool on, const char *name) {
    if (on)
      return;
    if (!out.empty())
      out += ',';
    out += name;
  };
  add(c.edfpm, "edfpm");
  add(c.fsc, "fsc");
  add(c.cswp, "cswp");
  add(c.mpr, "mpr");
  add(c.mprgd, "mprgd");
  return out;
}

bool ModelConfig::has(Modality m) const {
  return std::find(modalities.begin(), modalities.end(), m) != modalities.end();
}

int ModelConfig::mpr_length() const {
  if (!components.mpr || !components.mprgd)
    return 0;
  return static_cast<int>(phases.size()) * radiomics::kPerPhase;
}

void ModelConfig::validate() const {
  if (base_channels < 1)
    throw ConfigError("base_channels must be >= 1, got " + std::to_string(base_channels));
  if (modalities.empty())
    throw ConfigError("modality combo is empty");
  if (phases.empty())
    throw ConfigError("phase combo is empty");
  auto ms = modalities;
  std::sort(ms.begin(), ms.end());
  if (std::adjacent_find(ms.begin(), ms.end()) != ms.end() || ms != modalities)
    throw ConfigError("modality combo must be distinct and in t1,t2,dwi order");
  auto ps = phases;
  std::sort(ps.begin(), ps.end());
  if (std::adjacent_find(ps.begin(), ps.end()) != ps.end() || ps != phases)
    throw ConfigError("phase combo must be distinct and in a,pv,delay order");
  if (cswp_sharpness <= 0)
    throw ConfigError("cswp sharpness must be positive");
}

namespace {

std::vector<std::string> split_csv(const std::string &csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(" \t");
    auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  return out;
}

template <typename E, std::size_t N>
std::vector<E> parse_names(const std::string &csv, const std::array<E, N> &all,
                           const char *(*name)(E), const char *what) {
  std::vector<E> out;
  for (const auto &tok : split_csv(csv)) {
    auto it = std::find_if(all.begin(), all.end(), [&](E e) { return tok == name(e); });
    if (it == all.end())
      throw ConfigError(std::string("unknown ") + what + " '" + tok + "'");
    if (std::find(out.begin(), out.end(), *it) != out.end())
      throw ConfigError(std::string("duplicate ") + what + " '" + tok + "'");
    out.push_back(*it);
  }
  if (out.empty())
    throw ConfigError(std::string("empty ") + what + " list");
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace

std::vector<Modality> parse_modalities(const std::string &csv) {
  return parse_names(csv, kAllModalities, modality_name, "modality");
}

std::vector<Phase> parse_phases(const std::string &csv) {
  return parse_names(csv, kAllPhases, phase_name, "phase");
}

std::string join_modalities(const std::vector<Modality> &ms, char sep) {
  std::string out;
  for (auto m : ms) {
    if (!out.empty())
      out += sep;
    out += modality_name(m);
  }
  return out;
}

std::string join_phases(const std::vector<Phase> &ps, char sep) {
  std::string out;
  for (auto p : ps) {
    if (!out.empty())
      out += sep;
    out += phase_name(p);
  }
  return out;
}

} // namespace ual
