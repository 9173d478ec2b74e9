#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace ual::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Flat `key = value` file; '#' starts a comment. Throws ConfigError.
std::map<std::string, std::string> read_config_file(const std::filesystem::path &path);

/// Appends `--key value` for every config-file entry whose flag is not
/// already on the command line, so explicit flags win.
std::vector<std::string> merge_config(const std::vector<std::string> &args);

/// Entry point of the `ual` tool; args[0] is the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace ual::cli
