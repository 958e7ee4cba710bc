#include "mgeo_cli/manifest.hpp"

#include <filesystem>
#include <fstream>

#include "mgeo/errors.hpp"

namespace mgeo::cli {

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IngestError, "cannot hash missing file " + path);
  std::uint64_t h = 14695981039346656037ULL;
  char buf[8192];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

RunManifest::RunManifest(std::string command, nlohmann::json config)
    : command_(std::move(command)), config_(std::move(config)) {}

void RunManifest::add_input(const std::string& path) {
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a_file(path)));
  inputs_[std::filesystem::path(path).filename().string()] = std::string("fnv1a64:") + hex;
}

void RunManifest::add_output(const std::string& path) {
  outputs_.push_back(std::filesystem::path(path).filename().string());
}

void RunManifest::write(const std::string& out_dir) const {
  nlohmann::json j;
  j["command"] = command_;
  j["config"] = config_;
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  j["tool_version"] = "mgeo 0.1.0";
  std::ofstream out(std::filesystem::path(out_dir) / "manifest.json");
  if (!out) throw Error(ErrorCode::IngestError, "cannot write manifest in " + out_dir);
  out << j.dump(2) << "\n";
}

}  // namespace mgeo::cli
