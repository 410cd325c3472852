#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "faor/erp_geometry.hpp"
#include "faor/errors.hpp"

namespace faor {
namespace {

constexpr double kPiRef = 3.14159265358979323846;

TEST(PixelToSpherical, CornerPixelOfSmallGrid) {
  const auto c = pixel_to_spherical(ErpGrid(2, 4), 0, 0);
  EXPECT_DOUBLE_EQ(c.lat, kPiRef / 4);
  EXPECT_DOUBLE_EQ(c.lon, -3 * kPiRef / 4);
}

TEST(PixelToSpherical, GridCenterIsEquatorAndPrimeMeridian) {
  const auto a = pixel_to_spherical(ErpGrid(2, 4), 0.5, 1.5);
  EXPECT_DOUBLE_EQ(a.lat, 0.0);
  EXPECT_DOUBLE_EQ(a.lon, 0.0);
  const auto b = pixel_to_spherical(ErpGrid(512, 1024), 255.5, 511.5);
  EXPECT_DOUBLE_EQ(b.lat, 0.0);
  EXPECT_DOUBLE_EQ(b.lon, 0.0);
}

TEST(PixelToSpherical, LongitudeWrapsByWholeTurns) {
  const ErpGrid g(8, 16);
  for (int k = -3; k <= 3; ++k) {
    const auto a = pixel_to_spherical(g, 2.25, 5.5);
    const auto b = pixel_to_spherical(g, 2.25, 5.5 + k * 16.0);
    EXPECT_NEAR(a.lon, b.lon, 1e-12) << "k=" << k;
    EXPECT_EQ(a.lat, b.lat);
  }
}

TEST(PixelToSpherical, LongitudeStaysInHalfOpenRange) {
  const ErpGrid g(4, 8);
  for (double col = -20.0; col < 20.0; col += 0.125) {
    const auto c = pixel_to_spherical(g, 1.0, col);
    EXPECT_GE(c.lon, -kPiRef);
    EXPECT_LT(c.lon, kPiRef);
  }
}

TEST(PixelToSpherical, RejectsInvalidInput) {
  const ErpGrid g(4, 8);
  EXPECT_THROW(pixel_to_spherical(g, -0.01, 0), InputError);
  EXPECT_THROW(pixel_to_spherical(g, 4.0, 0), InputError);
  EXPECT_THROW(pixel_to_spherical(g, std::nan(""), 0), InputError);
  EXPECT_THROW(pixel_to_spherical(g, 0, std::numeric_limits<double>::infinity()), InputError);
}

TEST(SphericalToPixel, InvertsKnownPoints) {
  const ErpGrid g(2, 4);
  const auto p = spherical_to_pixel(g, SphericalCoord::make(kPiRef / 4, -3 * kPiRef / 4));
  EXPECT_NEAR(p.row, 0.0, 1e-15);
  EXPECT_NEAR(p.col, 0.0, 1e-15);
  const auto q = spherical_to_pixel(g, SphericalCoord::make(0, 0));
  EXPECT_DOUBLE_EQ(q.row, 0.5);
  EXPECT_DOUBLE_EQ(q.col, 1.5);
}

TEST(SphericalToPixel, RandomRoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 4096);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const ErpGrid g(dim(rng), dim(rng));
    std::uniform_real_distribution<double> row(0.0, g.height() - 0.5);
    std::uniform_real_distribution<double> col(0.0, g.width());
    const double r = row(rng);
    const double c = col(rng);
    const auto p = spherical_to_pixel(g, pixel_to_spherical(g, r, c));
    double dc = std::abs(p.col - c);
    dc = std::min(dc, g.width() - dc);
    worst = std::max({worst, std::abs(p.row - r), dc});
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(SphericalCoordType, EnforcesInvariants) {
  EXPECT_THROW(SphericalCoord::make(kPiRef / 2, 0), InputError);
  EXPECT_THROW(SphericalCoord::make(-kPiRef / 2, 0), InputError);
  EXPECT_DOUBLE_EQ(SphericalCoord::make(0, kPiRef).lon, -kPiRef);
  EXPECT_NEAR(SphericalCoord::make(0, 3 * kPiRef).lon, -kPiRef, 1e-15);
}

TEST(ErpGridType, RejectsEmptyGrids) {
  EXPECT_THROW(ErpGrid(0, 4), InputError);
  EXPECT_THROW(ErpGrid(4, 0), InputError);
  EXPECT_NO_THROW(ErpGrid(1, 1));
}

TEST(DistortionMap, TwoRowGrid) {
  const auto m = distortion_map(ErpGrid(2, 3));
  for (double v : m.values) EXPECT_NEAR(v, 255.0 * std::sqrt(2.0) / 2.0, 1e-12);
  EXPECT_NEAR(m.values[0], 180.312, 1e-3);
}

TEST(DistortionMap, FourRowGridFirstRow) {
  const auto m = distortion_map(ErpGrid(4, 2));
  EXPECT_NEAR(m.at(0, 0), 255.0 * std::cos(3.0 * kPiRef / 8.0), 1e-12);
  EXPECT_NEAR(m.at(0, 0), 97.585, 1e-3);
}

TEST(DistortionMap, InvariantsOnManyGrids) {
  for (int h : {1, 2, 3, 7, 64, 255, 256}) {
    const ErpGrid g(h, 5);
    const auto m = distortion_map(g);
    ASSERT_EQ(m.values.size(), g.pixel_count());
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < 5; ++c) {
        EXPECT_EQ(m.at(r, c), m.at(r, 0));
        EXPECT_EQ(m.at(r, c), 255.0 * cos_latitude_weight(g, r));
        EXPECT_GE(m.at(r, c), 0.0);
        EXPECT_LE(m.at(r, c), 255.0);
      }
      EXPECT_NEAR(m.at(r, 0), m.at(h - 1 - r, 0), 1e-12);
    }
    // Strictly decreasing away from the equator rows.
    for (int r = 0; r + 1 < h / 2; ++r) EXPECT_LT(m.at(r, 0), m.at(r + 1, 0));
    if (h % 2 == 0 && h >= 2) {
      EXPECT_NEAR(m.at(h / 2, 0), 255.0 * std::cos(0.5 * kPiRef / h), 1e-12);
    }
  }
}

TEST(CosLatitudeWeight, KnownValues) {
  EXPECT_NEAR(cos_latitude_weight(ErpGrid(2, 1), 0), 0.70710678118654752, 1e-15);
  const ErpGrid g(4, 1);
  const double expected[4] = {std::cos(3 * kPiRef / 8), std::cos(kPiRef / 8),
                              std::cos(kPiRef / 8), std::cos(3 * kPiRef / 8)};
  for (int r = 0; r < 4; ++r) EXPECT_NEAR(cos_latitude_weight(g, r), expected[r], 1e-15);
  EXPECT_THROW(cos_latitude_weight(g, 4), InputError);
  EXPECT_THROW(cos_latitude_weight(g, -1), InputError);
}

TEST(CosLatitudeWeight, EquatorAdjacentRow) {
  for (int h : {2, 8, 100}) {
    EXPECT_NEAR(cos_latitude_weight(ErpGrid(h, 1), h / 2 - 1), std::cos(0.5 * kPiRef / h), 1e-15);
  }
}

TEST(HrCoordinateGrid, IdentityScaleReproducesPixelCenters) {
  const ErpGrid g(2, 4);
  const auto t = hr_coordinate_grid(g, 1.0);
  ASSERT_EQ(t.rows(), 2);
  ASSERT_EQ(t.cols(), 4);
  for (int r = 0; r < 2; ++r) EXPECT_EQ(t.lats[r], pixel_to_spherical(g, r, 0).lat);
  for (int c = 0; c < 4; ++c) EXPECT_EQ(t.lons[c], pixel_to_spherical(g, 0, c).lon);
}

TEST(HrCoordinateGrid, DoubleScaleLatitudes) {
  const auto t = hr_coordinate_grid(ErpGrid(2, 4), 2.0);
  ASSERT_EQ(t.rows(), 4);
  ASSERT_EQ(t.cols(), 8);
  for (int h = 0; h < 4; ++h) EXPECT_NEAR(t.lats[h], (0.5 - (h + 0.5) / 4) * kPiRef, 1e-15);
}

TEST(HrCoordinateGrid, FractionalScaleRounding) {
  const auto t = hr_coordinate_grid(ErpGrid(64, 128), 3.7);
  EXPECT_EQ(t.rows(), 237);
  EXPECT_EQ(t.cols(), 474);
  EXPECT_EQ(scaled_extent(5, 0.5), 3);  // 2.5 rounds away from zero
  EXPECT_EQ(scaled_extent(3, 0.5), 2);
}

TEST(HrCoordinateGrid, MonotoneAndValidated) {
  const auto t = hr_coordinate_grid(ErpGrid(5, 9), 1.7);
  for (int i = 1; i < t.rows(); ++i) EXPECT_LT(t.lats[i], t.lats[i - 1]);
  for (int i = 1; i < t.cols(); ++i) EXPECT_GT(t.lons[i], t.lons[i - 1]);
  EXPECT_THROW(hr_coordinate_grid(ErpGrid(2, 4), 0.1), InputError);
  EXPECT_THROW(hr_coordinate_grid(ErpGrid(2, 4), 0.0), InputError);
  EXPECT_THROW(hr_coordinate_grid(ErpGrid(2, 4), -1.0), InputError);
}

TEST(CoordGridBand, SelectsRows) {
  const auto t = hr_coordinate_grid(ErpGrid(4, 4), 2.0);
  const auto b = t.row_band(2, 5);
  ASSERT_EQ(b.rows(), 3);
  EXPECT_EQ(b.lats[0], t.lats[2]);
  EXPECT_EQ(b.lons, t.lons);
  EXPECT_THROW(t.row_band(5, 9), InputError);
}

}  // namespace
}  // namespace faor
