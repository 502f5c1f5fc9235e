#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agsfh/dataset.hpp"
#include "agsfh/error.hpp"
#include "agsfh/training.hpp"

namespace agsfh::cli {

/// Bad flag values, unknown config keys, malformed synth specs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Everything a run needs besides the subcommand itself.
///
/// Stored on disk as flat `key = value` lines; `#` starts a comment. The
/// keys are listed by config_keys() and written in that order by
/// format_config, so parse(format(c)) == c.
struct RunConfig {
  std::vector<std::filesystem::path> features;  // one file per modality, modality order
  std::filesystem::path split;
  std::filesystem::path labels;
  std::string synth;  // synthetic data spec; replaces the files when set
  std::filesystem::path out = ".";
  int verbosity = 0;
  int threads = 1;
  Hyperparams hyper;

  bool operator==(const RunConfig&) const = default;
};

std::span<const std::string_view> config_keys();

/// Sets one key; throws ConfigError for unknown keys or malformed values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);
std::string format_config(const RunConfig& config);

/// `C=4,N=2000,dims=16:24,noise=0.1,seed=0,query=0.1`; omitted keys keep
/// their SynthSpec defaults.
SynthSpec parse_synth(std::string_view text);

/// Synthetic data when `synth` is set, otherwise the feature, split and
/// label files. Without a split file every instance is a training instance.
Dataset load_dataset(const RunConfig& config);

}  // namespace agsfh::cli
