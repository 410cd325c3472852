#pragma once

// Resampling of latent/pixel grids on the sphere.
//
// Every resampler locates a target (lat, lon) on a source lattice, wraps
// columns across the longitude seam and clamps rows at the poles. The
// geodesic resampler interpolates along constant-latitude arcs first and
// then along the shared meridian, with slerp weights
//   w_a = sin((1 - t) * delta) / sin(delta),  w_b = sin(t * delta) / sin(delta)
// where delta is the angular spacing of the two samples (not the angle
// between the feature vectors). These weights are used as-is; they do not
// sum to one for finite delta.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "faor/erp_geometry.hpp"
#include "faor/grid.hpp"

namespace faor {

// Below this spacing sin(delta) is too imprecise; the linear limit is used.
inline constexpr double kDegenerateDelta = 1e-6;

struct SlerpSegment {
  double delta = 0.0;  // radians, in [0, pi]
  double t = 0.0;      // in [0, 1]

  // Near-zero spacing, or spacing so close to pi that sin(delta) vanishes.
  bool degenerate() const;
};

// (w_a, w_b) for the segment; (1 - t, t) when degenerate.
std::array<double, 2> slerp_weights(const SlerpSegment& seg);

std::vector<double> slerp_pair(std::span<const double> z_a, std::span<const double> z_b,
                               const SlerpSegment& seg);

struct GridIndex {
  int row = 0;
  int col = 0;
  friend bool operator==(const GridIndex&, const GridIndex&) = default;
};

// z0, z1 lie on the northern bracketing row and z2, z3 on the southern one.
struct NeighborSet {
  std::array<GridIndex, 4> z;
  SlerpSegment north;  // z0 -> z1 along the parallel
  SlerpSegment south;  // z2 -> z3 along the parallel
  SlerpSegment cross;  // z01 -> z23 along the meridian
};

// Continuous position of a target along one lattice axis.
struct AxisSample {
  int i0 = 0;
  int i1 = 0;
  double t = 0.0;
  double delta = 0.0;
  double position = 0.0;  // in sample-center units, after snapping
};

// A regular lattice of samples covering a latitude/longitude window of an
// ERP frame. The whole-frame lattice wraps in longitude; a crop does not.
class SourceLattice {
 public:
  static SourceLattice full(const ErpGrid& grid);

  // Window of `rows` x `cols` samples covering the frame rectangle that
  // starts at edge coordinates (row_edge, col_edge) and spans
  // row_extent x col_extent frame pixels. Columns may cross the seam.
  static SourceLattice window(const ErpGrid& frame, double row_edge, double col_edge,
                              double row_extent, double col_extent, int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool wraps() const { return wraps_; }
  double lat_spacing() const;  // radians between adjacent rows
  double lon_spacing() const;  // radians between adjacent columns

  // Target position in lattice sample units. Positions are snapped to a
  // grid of about 2^-46 times the axis length so that lattice-aligned targets
  // resolve exactly.
  PixelPosition locate(const SphericalCoord& target) const;

  AxisSample row_sample(double lat) const;
  AxisSample col_sample(double lon) const;

  // Sample-center coordinate of lattice pixel (row, col).
  SphericalCoord center(int row, int col) const;

 private:
  SourceLattice(const ErpGrid& frame, double row_edge, double col_edge, double row_extent,
                double col_extent, int rows, int cols);

  ErpGrid frame_;
  double row_edge_;
  double col_edge_;
  double row_extent_;
  double col_extent_;
  int rows_;
  int cols_;
  bool wraps_;
};

NeighborSet find_neighbors(const SourceLattice& lattice, const SphericalCoord& target);
NeighborSet find_neighbors(const LatentGrid& grid, const ErpGrid& src,
                           const SphericalCoord& target);

enum class ResamplerKind { kGeodesic, kBilinear, kBicubic };

ResamplerKind parse_resampler(std::string_view name);
std::string_view resampler_name(ResamplerKind kind);

// Sparse linear map from lattice samples to targets: output m is
// sum_k weight[m * taps + k] * sample[index[m * taps + k]], summed in k order.
struct Stencil {
  int taps = 0;
  std::vector<std::int64_t> index;  // flat row * cols + col
  std::vector<double> weight;

  std::size_t size() const { return taps == 0 ? 0 : index.size() / taps; }
};

Stencil build_stencil(const SourceLattice& lattice, std::span<const SphericalCoord> targets,
                      ResamplerKind kind);

// Applies a stencil to a row-major (samples x channels) array.
std::vector<double> apply_stencil(std::span<const double> samples, int channels,
                                  const Stencil& stencil);

// Catmull-Rom weights (a = -0.5) for taps at offsets -1, 0, 1, 2 from floor.
std::array<double, 4> cubic_weights(double t);

LatentGrid geodesic_resample(const LatentGrid& grid, const ErpGrid& src,
                             const CoordGrid& targets);
LatentGrid bilinear_resample(const LatentGrid& grid, const ErpGrid& src,
                             const CoordGrid& targets);
LatentGrid bicubic_resample(const LatentGrid& grid, const ErpGrid& src,
                            const CoordGrid& targets);
LatentGrid resample(ResamplerKind kind, const LatentGrid& grid, const ErpGrid& src,
                    const CoordGrid& targets);

// Planar Catmull-Rom resize with replicated borders, used on crops that do
// not span the full longitude range.
LatentGrid resize_bicubic_planar(const LatentGrid& patch, int out_height, int out_width);

}  // namespace faor
