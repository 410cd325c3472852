#pragma once

// Image files: 8/16-bit PNG (gray, RGB, palette; alpha is dropped) and
// binary PPM/PGM. Samples decode to [0, 1]; encoding rounds half-up.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "faor/grid.hpp"

namespace faor {

// Raw decoded samples before normalization.
struct RawImage {
  int height = 0;
  int width = 0;
  int channels = 0;   // 1 or 3
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint16_t> samples;
};

RawImage read_raw_image(const std::filesystem::path& path);
void write_raw_image(const std::filesystem::path& path, const RawImage& image);

// Always 3 channels; gray inputs are replicated.
ErpImage load_image(const std::filesystem::path& path);

// Format from the extension (.png, .ppm). bit_depth is 8 or 16.
void save_image(const ErpImage& image, const std::filesystem::path& path, int bit_depth = 8);

// round(v * max) with halves rounded up, after clamping to [0, 1].
std::uint16_t quantize(double v, int bit_depth);

struct InstanceMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint16_t> ids;
};

// Single-channel 8 or 16-bit PNG of instance ids, 0 = background.
InstanceMap load_instance_map(const std::filesystem::path& path);
void save_instance_map(const InstanceMap& map, const std::filesystem::path& path);

// Row-major little-endian float32.
void write_float32(const std::filesystem::path& path, std::span<const double> values);
std::vector<float> read_float32(const std::filesystem::path& path);

}  // namespace faor
