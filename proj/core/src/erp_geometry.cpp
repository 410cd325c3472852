#include "faor/erp_geometry.hpp"

#include <cmath>
#include <string>

#include "faor/errors.hpp"

namespace faor {

ErpGrid::ErpGrid(int height, int width) : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw InputError("ERP grid needs at least one row and one column, got " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
}

double wrap_longitude(double lon) {
  if (!std::isfinite(lon)) throw InputError("longitude is not finite");
  if (lon >= -kPi && lon < kPi) return lon;
  double wrapped = lon - kTwoPi * std::floor((lon + kPi) / kTwoPi);
  // floor() can leave the value a rounding step outside the half-open range.
  if (wrapped >= kPi) wrapped -= kTwoPi;
  if (wrapped < -kPi) wrapped = -kPi;
  return wrapped;
}

SphericalCoord SphericalCoord::make(double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon)) {
    throw InputError("spherical coordinate is not finite");
  }
  if (!(lat > -kPi / 2 && lat < kPi / 2)) {
    throw InputError("latitude " + std::to_string(lat) + " outside (-pi/2, pi/2)");
  }
  return SphericalCoord{lat, wrap_longitude(lon)};
}

SphericalCoord pixel_to_spherical(const ErpGrid& grid, double row, double col) {
  if (!std::isfinite(row) || !std::isfinite(col)) {
    throw InputError("pixel position is not finite");
  }
  if (row < 0.0 || row >= grid.height()) {
    throw InputError("row " + std::to_string(row) + " outside [0, " +
                     std::to_string(grid.height()) + ")");
  }
  const double lat = (0.5 - (row + 0.5) / grid.height()) * kPi;
  const double lon = ((col + 0.5) / grid.width() - 0.5) * kTwoPi;
  return SphericalCoord::make(lat, lon);
}

PixelPosition spherical_to_pixel(const ErpGrid& grid, const SphericalCoord& coord) {
  const SphericalCoord c = SphericalCoord::make(coord.lat, coord.lon);
  const double row = (0.5 - c.lat / kPi) * grid.height() - 0.5;
  double col = (c.lon / kTwoPi + 0.5) * grid.width() - 0.5;
  if (col < 0.0) col += grid.width();
  if (col >= grid.width()) col -= grid.width();
  return PixelPosition{row, col};
}

double cos_latitude_weight(const ErpGrid& grid, int row) {
  if (row < 0 || row >= grid.height()) {
    throw InputError("row " + std::to_string(row) + " outside the grid");
  }
  const double h = static_cast<double>(grid.height());
  return std::cos((row + 0.5 - h / 2.0) / h * kPi);
}

DistortionMap distortion_map(const ErpGrid& grid) {
  DistortionMap map;
  map.height = grid.height();
  map.width = grid.width();
  map.values.resize(grid.pixel_count());
  for (int h = 0; h < grid.height(); ++h) {
    const double v = 255.0 * cos_latitude_weight(grid, h);
    for (int w = 0; w < grid.width(); ++w) {
      map.values[static_cast<std::size_t>(h) * grid.width() + w] = v;
    }
  }
  return map;
}

CoordGrid CoordGrid::row_band(int begin, int end) const {
  if (begin < 0 || end > rows() || begin >= end) {
    throw InputError("invalid row band of a coordinate grid");
  }
  CoordGrid band;
  band.lats.assign(lats.begin() + begin, lats.begin() + end);
  band.lons = lons;
  band.scale = scale;
  return band;
}

int scaled_extent(int n, double scale) {
  return static_cast<int>(std::lround(scale * n));
}

CoordGrid hr_coordinate_grid(const ErpGrid& grid, double scale) {
  if (!std::isfinite(scale) || scale <= 0.0) {
    throw InputError("scale must be a positive finite number");
  }
  const int rows = scaled_extent(grid.height(), scale);
  const int cols = scaled_extent(grid.width(), scale);
  if (rows < 1 || cols < 1) {
    throw InputError("scale " + std::to_string(scale) + " produces an empty grid");
  }
  const ErpGrid hr(rows, cols);
  CoordGrid out;
  out.scale = scale;
  out.lats.resize(rows);
  out.lons.resize(cols);
  for (int h = 0; h < rows; ++h) out.lats[h] = pixel_to_spherical(hr, h, 0).lat;
  for (int w = 0; w < cols; ++w) out.lons[w] = pixel_to_spherical(hr, 0, w).lon;
  return out;
}

}  // namespace faor
