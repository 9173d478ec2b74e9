#include "ual/uald_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ual/errors.hpp"

namespace ual::io {
namespace {

constexpr std::array<char, 4> kMagic = {'U', 'A', 'L', 'D'};
constexpr std::uint32_t kMaxRank = 8;

static_assert(std::endian::native == std::endian::little,
              "uald I/O assumes a little-endian host");

void put_u32(std::ostream &out, std::uint32_t v) {
  out.write(reinterpret_cast<const char *>(&v), sizeof v);
}

bool get_u32(std::istream &in, std::uint32_t &v) {
  in.read(reinterpret_cast<char *>(&v), sizeof v);
  return static_cast<std::size_t>(in.gcount()) == sizeof v;
}

} // namespace

void write_uald(std::ostream &out, std::span<const std::uint32_t> dims,
                std::span<const float> values) {
  std::size_t expected = 1;
  for (auto d : dims)
    expected *= d;
  if (expected != values.size())
    throw DimensionError("uald write: dims describe " + std::to_string(expected) +
                         " values but " + std::to_string(values.size()) + " given");
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims)
    put_u32(out, d);
  out.write(reinterpret_cast<const char *>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
}

UaldArray read_uald(std::istream &in, const std::string &source) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kMagic)
    throw FormatError(source + ": unknown magic (expected \"UALD\")");
  std::uint32_t rank = 0;
  if (!get_u32(in, rank))
    throw FormatError(source + ": truncated header (rank)");
  if (rank > kMaxRank)
    throw FormatError(source + ": malformed header, rank " + std::to_string(rank));
  UaldArray arr;
  arr.dims.resize(rank);
  std::size_t count = 1;
  for (auto &d : arr.dims) {
    if (!get_u32(in, d))
      throw FormatError(source + ": truncated header (dims)");
    count *= d;
  }
  arr.values.resize(count);
  in.read(reinterpret_cast<char *>(arr.values.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  const auto got = static_cast<std::size_t>(in.gcount()) / sizeof(float);
  if (got != count)
    throw FormatError(source + ": truncated payload, expected " + std::to_string(count) +
                      " values, got " + std::to_string(got));
  return arr;
}

void write_uald_file(const std::filesystem::path &path, std::span<const std::uint32_t> dims,
                     std::span<const float> values) {
  std::ostringstream buf(std::ios::binary);
  write_uald(buf, dims, values);
  write_file_atomic(path, buf.str());
}

UaldArray read_uald_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError(path.string() + ": cannot open");
  return read_uald(in, path.string());
}

void write_grid(const std::filesystem::path &path, const Grid &grid) {
  const std::array<std::uint32_t, 2> dims = {static_cast<std::uint32_t>(grid.height),
                                             static_cast<std::uint32_t>(grid.width)};
  write_uald_file(path, dims, grid.values);
}

Grid read_grid(const std::filesystem::path &path) {
  auto arr = read_uald_file(path);
  if (arr.dims.size() != 2)
    throw FormatError(path.string() + ": shape mismatch, expected rank 2, got rank " +
                      std::to_string(arr.dims.size()));
  Grid g;
  g.height = static_cast<int>(arr.dims[0]);
  g.width = static_cast<int>(arr.dims[1]);
  g.values = std::move(arr.values);
  return g;
}

void write_file_atomic(const std::filesystem::path &path, const std::string &bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw DataError(tmp.string() + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
      throw DataError(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

} // namespace ual::io
