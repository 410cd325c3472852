#include "faor/grid.hpp"

#include <cmath>
#include <string>

#include "faor/errors.hpp"

namespace faor {

LatentGrid::LatentGrid(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 1 || width < 1 || channels < 1) {
    throw InputError("grid dimensions must be positive");
  }
  values_.assign(pixel_count() * channels, fill);
}

LatentGrid::LatentGrid(int height, int width, int channels, std::vector<double> values)
    : height_(height), width_(width), channels_(channels), values_(std::move(values)) {
  if (height < 1 || width < 1 || channels < 1) {
    throw InputError("grid dimensions must be positive");
  }
  if (values_.size() != pixel_count() * channels) {
    throw InputError("grid holds " + std::to_string(values_.size()) +
                     " values, expected " + std::to_string(pixel_count() * channels));
  }
}

void LatentGrid::check_finite(const char* what) const {
  for (double v : values_) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite value");
  }
}

LatentGrid LatentGrid::roll_columns(int k) const {
  LatentGrid out(height_, width_, channels_);
  const int shift = ((k % width_) + width_) % width_;
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      const auto src = pixel(r, c);
      auto dst = out.pixel(r, (c + shift) % width_);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  return out;
}

}  // namespace faor
