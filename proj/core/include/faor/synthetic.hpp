#pragma once

// Procedural omnidirectional images for toy training and tests.
//
// Each image is a latitude-graded sky with a handful of spherical caps
// ("objects") painted on top. Textures are defined on the unit sphere
// (stripes and checkers in 3-D), so their ERP appearance stretches with
// latitude the way real panoramas do. Cap k carries instance id k.

#include <cstdint>
#include <vector>

#include "faor/training.hpp"

namespace faor {

struct SyntheticOptions {
  int height = 256;
  int width = 512;
  int min_objects = 4;
  int max_objects = 9;
  int supersample = 3;  // per-axis samples per pixel
  // Angular frequency range of the cap textures (cycles per 2*pi radians).
  // The upper end reaches the Nyquist limit of a 2x downsampled 256-row frame.
  double min_frequency = 20.0;
  double max_frequency = 120.0;
};

TrainImage make_synthetic_odi(std::uint64_t seed, const SyntheticOptions& options = {});

// `count` images with seeds derived from `seed`.
std::vector<TrainImage> make_synthetic_set(int count, std::uint64_t seed,
                                           const SyntheticOptions& options = {});

}  // namespace faor
