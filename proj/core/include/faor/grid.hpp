#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "faor/erp_geometry.hpp"

namespace faor {

// Dense H x W x D grid of finite reals, row-major with channels innermost.
// Pixel images are grids with D equal to the number of color channels.
class LatentGrid {
 public:
  LatentGrid() = default;
  LatentGrid(int height, int width, int channels, double fill = 0.0);
  LatentGrid(int height, int width, int channels, std::vector<double> values);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  ErpGrid erp() const { return ErpGrid(height_, width_); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  std::size_t offset(int row, int col) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_;
  }
  std::span<double> pixel(int row, int col) {
    return {values_.data() + offset(row, col), static_cast<std::size_t>(channels_)};
  }
  std::span<const double> pixel(int row, int col) const {
    return {values_.data() + offset(row, col), static_cast<std::size_t>(channels_)};
  }
  double& at(int row, int col, int ch) { return values_[offset(row, col) + ch]; }
  double at(int row, int col, int ch) const { return values_[offset(row, col) + ch]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  // Throws NumericError if any value is NaN or infinite.
  void check_finite(const char* what) const;

  // Copy rotated east by `k` columns: out(r, (c + k) mod W) = in(r, c).
  LatentGrid roll_columns(int k) const;

  friend bool operator==(const LatentGrid&, const LatentGrid&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> values_;
};

using ErpImage = LatentGrid;

}  // namespace faor
