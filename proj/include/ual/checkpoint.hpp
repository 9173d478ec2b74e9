#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ual/nn/params.hpp"

namespace ual::checkpoint {

/// File layout: magic "UALCKPT1", u64 LE length + JSON header (config echo
/// and metadata), u32 LE record count, then per record a u32 LE name length,
/// the name, and one `.uald` array.
struct Checkpoint {
  nlohmann::ordered_json header;
  std::vector<nn::NamedTensor> tensors;

  [[nodiscard]] const nn::Tensor *find(const std::string &name) const;
};

void write(const std::filesystem::path &path, const Checkpoint &ckpt);
/// Throws FormatError naming the file on any corruption.
Checkpoint read(const std::filesystem::path &path);

/// Copies stored values into `params` by name (prefix + param name). Throws
/// FormatError when a tensor is missing or its shape differs.
void load_params(const Checkpoint &ckpt, const std::string &prefix, nn::ParamList &params,
                 const std::filesystem::path &source);

} // namespace ual::checkpoint
