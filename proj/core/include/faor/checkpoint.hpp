#pragma once

// faor-ckpt-v1: a named-parameter container, all integers and floats
// little-endian.
//
//   "faor-ckpt-v1"                       12 bytes
//   u32 config length, config text       model configuration (key = value)
//   u32 entry count
//   per entry:
//     u32 name length, name bytes
//     u32 rank, u32 dims[rank]
//     f32 values[product(dims)]          row-major

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "faor/tensor.hpp"

namespace faor {

inline constexpr std::string_view kCheckpointTag = "faor-ckpt-v1";

struct CheckpointEntry {
  std::string name;
  ad::Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::string config_text;
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry* find(std::string_view name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

template <typename T>
Checkpoint make_checkpoint(std::string config_text, const ad::ParameterSet<T>& params);

// Copies every parameter from the checkpoint by name; shapes must match and
// every parameter must be present.
template <typename T>
void load_parameters(const Checkpoint& ckpt, const ad::ParameterSet<T>& params);

}  // namespace faor
