#pragma once

// Coordinate conventions for equirectangular (ERP) grids.
//
// Pixel (row, col) has its center at (row + 0.5, col + 0.5) in edge
// coordinates. Row 0 is the northernmost row, column 0 starts at longitude
// -pi, and the last column is adjacent to column 0 across the seam.

#include <cstddef>
#include <numbers>
#include <vector>

namespace faor {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

class ErpGrid {
 public:
  ErpGrid(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  friend bool operator==(const ErpGrid&, const ErpGrid&) = default;

 private:
  int height_;
  int width_;
};

struct SphericalCoord {
  double lat = 0.0;  // (-pi/2, pi/2), positive north
  double lon = 0.0;  // [-pi, pi)

  // Validates latitude and normalizes longitude; throws InputError.
  static SphericalCoord make(double lat, double lon);
};

struct PixelPosition {
  double row = 0.0;
  double col = 0.0;
};

// Maps any finite longitude into [-pi, pi).
double wrap_longitude(double lon);

SphericalCoord pixel_to_spherical(const ErpGrid& grid, double row, double col);

// Inverse of pixel_to_spherical. The column is returned in [0, W).
PixelPosition spherical_to_pixel(const ErpGrid& grid, const SphericalCoord& coord);

// cos of the pixel-center latitude of `row`; the weight used by WS metrics.
double cos_latitude_weight(const ErpGrid& grid, int row);

// Stretching-ratio map: 255 * cos_latitude_weight(h) at every pixel.
struct DistortionMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // row-major, height * width

  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
};

DistortionMap distortion_map(const ErpGrid& grid);

// Pixel-center coordinates of the round(s*H) x round(s*W) ERP lattice.
struct CoordGrid {
  std::vector<double> lats;  // strictly decreasing (north to south)
  std::vector<double> lons;  // strictly increasing
  double scale = 1.0;

  int rows() const { return static_cast<int>(lats.size()); }
  int cols() const { return static_cast<int>(lons.size()); }
  std::size_t size() const { return lats.size() * lons.size(); }

  // Sub-lattice made of rows [begin, end); used to process tall outputs in bands.
  CoordGrid row_band(int begin, int end) const;
};

// Rounds s * n half away from zero.
int scaled_extent(int n, double scale);

CoordGrid hr_coordinate_grid(const ErpGrid& grid, double scale);

}  // namespace faor
