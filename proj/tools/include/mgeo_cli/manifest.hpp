#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace mgeo::cli {

/// FNV-1a 64-bit content hash, used to tie manifests to their input files.
std::uint64_t fnv1a_file(const std::string& path);

/// Reproducibility record for one command invocation: command name, full
/// configuration, input hashes and the produced files. Contains no
/// timestamps, so identical runs produce byte-identical manifests.
class RunManifest {
 public:
  RunManifest(std::string command, nlohmann::json config);

  void add_input(const std::string& path);
  void add_output(const std::string& path);

  /// Writes <out_dir>/manifest.json (itself excluded from the output list).
  void write(const std::string& out_dir) const;

  const nlohmann::json& config() const { return config_; }

 private:
  std::string command_;
  nlohmann::json config_;
  nlohmann::json inputs_ = nlohmann::json::object();
  std::vector<std::string> outputs_;
};

}  // namespace mgeo::cli
