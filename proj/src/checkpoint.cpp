#include "ual/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ual/errors.hpp"
#include "ual/uald_io.hpp"

namespace ual::checkpoint {

namespace {

constexpr char kMagic[8] = {'U', 'A', 'L', 'C', 'K', 'P', 'T', '1'};

template <typename T> void put(std::ostream &out, T v) {
  out.write(reinterpret_cast<const char *>(&v), sizeof v);
}

template <typename T> T get(std::istream &in, const std::string &source, const char *what) {
  T v{};
  if (!in.read(reinterpret_cast<char *>(&v), sizeof v))
    throw FormatError(source + ": truncated checkpoint (" + what + ")");
  return v;
}

} // namespace

const nn::Tensor *Checkpoint::find(const std::string &name) const {
  auto it = std::find_if(tensors.begin(), tensors.end(),
                         [&](const nn::NamedTensor &t) { return t.name == name; });
  return it == tensors.end() ? nullptr : &it->tensor;
}

void write(const std::filesystem::path &path, const Checkpoint &ckpt) {
  std::ostringstream out(std::ios::binary);
  out.write(kMagic, sizeof kMagic);
  const std::string header = ckpt.header.dump();
  put<std::uint64_t>(out, header.size());
  out << header;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto &[name, t] : ckpt.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out << name;
    std::vector<std::uint32_t> dims(t.shape().begin(), t.shape().end());
    std::vector<float> values(t.values().begin(), t.values().end());
    io::write_uald(out, dims, values);
  }
  io::write_file_atomic(path, out.str());
}

Checkpoint read(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  const std::string source = path.string();
  if (!in)
    throw DataError(source + ": cannot open checkpoint");
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw FormatError(source + ": not a checkpoint (bad magic)");
  Checkpoint ckpt;
  const auto hlen = get<std::uint64_t>(in, source, "header length");
  if (hlen > (1ULL << 30))
    throw FormatError(source + ": implausible header length");
  std::string header(hlen, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(hlen)))
    throw FormatError(source + ": truncated checkpoint (header)");
  try {
    ckpt.header = nlohmann::ordered_json::parse(header);
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(source + ": malformed checkpoint header: " + e.what());
  }
  const auto count = get<std::uint32_t>(in, source, "record count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto nlen = get<std::uint32_t>(in, source, "record name");
    if (nlen > 4096)
      throw FormatError(source + ": implausible record name length");
    std::string name(nlen, '\0');
    if (!in.read(name.data(), nlen))
      throw FormatError(source + ": truncated checkpoint (record name)");
    io::UaldArray arr = io::read_uald(in, source + ":" + name);
    nn::Shape shape(arr.dims.begin(), arr.dims.end());
    ckpt.tensors.push_back(
        {name, nn::Tensor::from(shape, std::vector<nn::Real>(arr.values.begin(), arr.values.end()))});
  }
  return ckpt;
}

void load_params(const Checkpoint &ckpt, const std::string &prefix, nn::ParamList &params,
                 const std::filesystem::path &source) {
  for (auto &[name, t] : params.items()) {
    const nn::Tensor *stored = ckpt.find(prefix + name);
    if (stored == nullptr)
      throw FormatError(source.string() + ": missing parameter " + name);
    if (stored->shape() != t.shape())
      throw FormatError(source.string() + ": parameter " + name + " has shape " +
                        nn::shape_str(stored->shape()) + ", expected " +
                        nn::shape_str(t.shape()));
    std::copy(stored->values().begin(), stored->values().end(), t.mutable_values().begin());
  }
}

} // namespace ual::checkpoint
