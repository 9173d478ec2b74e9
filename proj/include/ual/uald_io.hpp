#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ual/grid.hpp"

namespace ual::io {

/// In-memory form of one `.uald` record: magic "UALD", u32 LE rank,
/// rank x u32 LE dims, then prod(dims) f32 LE values, row-major.
struct UaldArray {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

void write_uald(std::ostream &out, std::span<const std::uint32_t> dims,
                std::span<const float> values);
/// `source` names the file in error messages.
UaldArray read_uald(std::istream &in, const std::string &source);

void write_uald_file(const std::filesystem::path &path, std::span<const std::uint32_t> dims,
                     std::span<const float> values);
UaldArray read_uald_file(const std::filesystem::path &path);

void write_grid(const std::filesystem::path &path, const Grid &grid);
Grid read_grid(const std::filesystem::path &path);

/// Writes `bytes` to `path` via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path &path, const std::string &bytes);

} // namespace ual::io
