#pragma once

// Per-run manifest written next to command outputs.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace faor {

// "<major>.<minor>.<patch>-g<commit>" of this build, or without the commit
// suffix when it was built outside a git checkout.
std::string version_string();

struct StageTimings {
  double encode_ms = 0.0;
  double resample_ms = 0.0;
  double sgif_ms = 0.0;
  double total_ms = 0.0;
};

struct RunManifest {
  std::string command;
  std::string config_path;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  StageTimings timings;
  std::string version = version_string();
  std::map<std::string, std::string> details;  // command-specific facts

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
  void write(const std::filesystem::path& path) const;
};

}  // namespace faor
