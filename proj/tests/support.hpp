#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "ual/grid.hpp"

namespace ual::test {

inline Grid random_grid(int h, int w, std::mt19937_64 &rng, float lo = 0.0F, float hi = 1.0F) {
  std::uniform_real_distribution<float> u(lo, hi);
  Grid g(h, w);
  for (auto &v : g.values)
    v = u(rng);
  return g;
}

inline Grid random_mask(int h, int w, std::mt19937_64 &rng, double p = 0.5) {
  std::bernoulli_distribution b(p);
  Grid g(h, w);
  for (auto &v : g.values)
    v = b(rng) ? 1.0F : 0.0F;
  return g;
}

// fresh scratch directory under the system temp dir
inline std::filesystem::path scratch_dir(const std::string &tag) {
  auto p = std::filesystem::temp_directory_path() / ("ual_test_" + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

} // namespace ual::test
