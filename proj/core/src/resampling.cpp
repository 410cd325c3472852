#include "faor/resampling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "faor/errors.hpp"

namespace faor {
namespace {

// Rounds a position on an axis of `count` samples to a grid of spacing
// 2^(bit_width(count) - 46), coarse enough to absorb rounding noise and fine
// enough to stay far below interpolation tolerances.
double snap(double position, int count) {
  const int shift = 46 - std::bit_width(static_cast<unsigned>(count));
  return std::ldexp(std::nearbyint(std::ldexp(position, shift)), -shift);
}

int floor_mod(std::int64_t value, int modulus) {
  const std::int64_t r = value % modulus;
  return static_cast<int>(r < 0 ? r + modulus : r);
}

int clamp_index(std::int64_t value, int count) {
  return static_cast<int>(std::clamp<std::int64_t>(value, 0, count - 1));
}

void check_matches(const LatentGrid& grid, const ErpGrid& src) {
  if (grid.height() != src.height() || grid.width() != src.width()) {
    throw InputError("grid is " + std::to_string(grid.height()) + "x" +
                     std::to_string(grid.width()) + " but the source ERP grid is " +
                     std::to_string(src.height()) + "x" + std::to_string(src.width()));
  }
}

AxisSample clamped_sample(double pos, int count, double spacing) {
  AxisSample s;
  s.position = pos;
  if (count == 1 || pos <= 0.0) {
    s.i0 = s.i1 = 0;
  } else if (pos >= count - 1) {
    s.i0 = s.i1 = count - 1;
  } else {
    const double base = std::floor(pos);
    s.i0 = static_cast<int>(base);
    s.i1 = s.i0 + 1;
    s.t = pos - base;
    s.delta = spacing;
  }
  return s;
}

}  // namespace

bool SlerpSegment::degenerate() const {
  return delta < kDegenerateDelta || std::sin(delta) < kDegenerateDelta;
}

std::array<double, 2> slerp_weights(const SlerpSegment& seg) {
  if (seg.degenerate()) return {1.0 - seg.t, seg.t};
  const double s = std::sin(seg.delta);
  return {std::sin((1.0 - seg.t) * seg.delta) / s, std::sin(seg.t * seg.delta) / s};
}

std::vector<double> slerp_pair(std::span<const double> z_a, std::span<const double> z_b,
                               const SlerpSegment& seg) {
  if (z_a.size() != z_b.size()) throw InputError("slerp_pair: vector lengths differ");
  if (!std::isfinite(seg.delta) || !std::isfinite(seg.t)) {
    throw NumericError("slerp_pair: non-finite segment");
  }
  if (seg.t < 0.0 || seg.t > 1.0 || seg.delta < 0.0 || seg.delta > kPi) {
    throw InputError("slerp_pair: segment outside t in [0,1], delta in [0,pi]");
  }
  const auto [wa, wb] = slerp_weights(seg);
  std::vector<double> out(z_a.size());
  for (std::size_t i = 0; i < z_a.size(); ++i) {
    if (!std::isfinite(z_a[i]) || !std::isfinite(z_b[i])) {
      throw NumericError("slerp_pair: non-finite input");
    }
    out[i] = wa * z_a[i] + wb * z_b[i];
  }
  return out;
}

SourceLattice::SourceLattice(const ErpGrid& frame, double row_edge, double col_edge,
                             double row_extent, double col_extent, int rows, int cols)
    : frame_(frame),
      row_edge_(row_edge),
      col_edge_(col_edge),
      row_extent_(row_extent),
      col_extent_(col_extent),
      rows_(rows),
      cols_(cols),
      wraps_(col_extent == frame.width()) {
  if (rows < 1 || cols < 1) throw InputError("lattice needs at least one sample");
  if (!(row_extent > 0.0) || !(col_extent > 0.0) || col_extent > frame.width() ||
      row_edge < 0.0 || row_edge + row_extent > frame.height()) {
    throw InputError("lattice window lies outside its ERP frame");
  }
}

SourceLattice SourceLattice::full(const ErpGrid& grid) {
  return SourceLattice(grid, 0.0, 0.0, grid.height(), grid.width(), grid.height(),
                       grid.width());
}

SourceLattice SourceLattice::window(const ErpGrid& frame, double row_edge, double col_edge,
                                    double row_extent, double col_extent, int rows,
                                    int cols) {
  return SourceLattice(frame, row_edge, col_edge, row_extent, col_extent, rows, cols);
}

double SourceLattice::lat_spacing() const {
  return kPi * (row_extent_ / rows_) / frame_.height();
}

double SourceLattice::lon_spacing() const {
  return kTwoPi * (col_extent_ / cols_) / frame_.width();
}

PixelPosition SourceLattice::locate(const SphericalCoord& target) const {
  const PixelPosition f = spherical_to_pixel(frame_, target);
  const double row = (f.row + 0.5 - row_edge_) * rows_ / row_extent_ - 0.5;
  const double fw = frame_.width();
  double x = f.col + 0.5 - col_edge_;
  // Place x in the frame-width interval centered on the window.
  const double low = col_extent_ / 2.0 - fw / 2.0;
  if (wraps_) {
    x -= fw * std::floor(x / fw);
    if (x >= fw) x -= fw;
  } else {
    while (x < low) x += fw;
    while (x >= low + fw) x -= fw;
  }
  const double col = x * cols_ / col_extent_ - 0.5;
  return PixelPosition{snap(row, rows_), snap(col, cols_)};
}

AxisSample SourceLattice::row_sample(double lat) const {
  const double pos = locate(SphericalCoord::make(lat, 0.0)).row;
  return clamped_sample(pos, rows_, lat_spacing());
}

AxisSample SourceLattice::col_sample(double lon) const {
  // The latitude is irrelevant for the column; the equator keeps it valid.
  const double pos = locate(SphericalCoord::make(0.0, lon)).col;
  if (!wraps_) return clamped_sample(pos, cols_, lon_spacing());
  AxisSample s;
  s.position = pos;
  if (cols_ == 1) return s;
  const double base = std::floor(pos);
  const auto c = static_cast<std::int64_t>(base);
  s.i0 = floor_mod(c, cols_);
  s.i1 = floor_mod(c + 1, cols_);
  s.t = pos - base;
  s.delta = lon_spacing();
  return s;
}

SphericalCoord SourceLattice::center(int row, int col) const {
  const double frame_row = row_edge_ + (row + 0.5) * row_extent_ / rows_ - 0.5;
  const double frame_col = col_edge_ + (col + 0.5) * col_extent_ / cols_ - 0.5;
  return pixel_to_spherical(frame_, frame_row, frame_col);
}

NeighborSet find_neighbors(const SourceLattice& lattice, const SphericalCoord& target) {
  const AxisSample r = lattice.row_sample(target.lat);
  const AxisSample c = lattice.col_sample(target.lon);
  NeighborSet n;
  n.z = {GridIndex{r.i0, c.i0}, GridIndex{r.i0, c.i1}, GridIndex{r.i1, c.i0},
         GridIndex{r.i1, c.i1}};
  n.north = SlerpSegment{c.delta, c.t};
  n.south = n.north;
  n.cross = SlerpSegment{r.delta, r.t};
  return n;
}

NeighborSet find_neighbors(const LatentGrid& grid, const ErpGrid& src,
                           const SphericalCoord& target) {
  check_matches(grid, src);
  return find_neighbors(SourceLattice::full(src), target);
}

ResamplerKind parse_resampler(std::string_view name) {
  if (name == "geodesic") return ResamplerKind::kGeodesic;
  if (name == "bilinear") return ResamplerKind::kBilinear;
  if (name == "bicubic") return ResamplerKind::kBicubic;
  throw InputError("unknown resampler '" + std::string(name) + "'");
}

std::string_view resampler_name(ResamplerKind kind) {
  switch (kind) {
    case ResamplerKind::kGeodesic: return "geodesic";
    case ResamplerKind::kBilinear: return "bilinear";
    case ResamplerKind::kBicubic: return "bicubic";
  }
  return "unknown";
}

std::array<double, 4> cubic_weights(double t) {
  constexpr double a = -0.5;
  const double x0 = t + 1.0;  // distance to tap -1
  const double x1 = t;        // tap 0
  const double x2 = 1.0 - t;  // tap 1
  const double x3 = 2.0 - t;  // tap 2
  auto outer = [](double x) { return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a; };
  auto inner = [](double x) { return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0; };
  return {outer(x0), inner(x1), inner(x2), outer(x3)};
}

namespace {

struct CubicAxis {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

CubicAxis cubic_axis(double pos, int count, bool wraps) {
  const double base = std::floor(pos);
  const auto b = static_cast<std::int64_t>(base);
  CubicAxis axis;
  axis.weight = cubic_weights(pos - base);
  for (int k = 0; k < 4; ++k) {
    const std::int64_t i = b - 1 + k;
    axis.index[k] = wraps ? floor_mod(i, count) : clamp_index(i, count);
  }
  return axis;
}

CubicAxis cubic_row(const SourceLattice& lattice, double lat) {
  return cubic_axis(lattice.row_sample(lat).position, lattice.rows(), false);
}

CubicAxis cubic_col(const SourceLattice& lattice, double lon) {
  return cubic_axis(lattice.col_sample(lon).position, lattice.cols(), lattice.wraps());
}

}  // namespace

Stencil build_stencil(const SourceLattice& lattice, std::span<const SphericalCoord> targets,
                      ResamplerKind kind) {
  Stencil st;
  st.taps = kind == ResamplerKind::kBicubic ? 16 : 4;
  st.index.reserve(targets.size() * st.taps);
  st.weight.reserve(targets.size() * st.taps);
  const std::int64_t cols = lattice.cols();
  auto flat = [cols](int r, int c) { return static_cast<std::int64_t>(r) * cols + c; };

  for (const SphericalCoord& target : targets) {
    if (kind == ResamplerKind::kBicubic) {
      const CubicAxis r = cubic_row(lattice, target.lat);
      const CubicAxis c = cubic_col(lattice, target.lon);
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
          st.index.push_back(flat(r.index[i], c.index[j]));
          st.weight.push_back(r.weight[i] * c.weight[j]);
        }
      }
      continue;
    }
    const NeighborSet n = find_neighbors(lattice, target);
    std::array<double, 2> lon_w;
    std::array<double, 2> lat_w;
    if (kind == ResamplerKind::kGeodesic) {
      lon_w = slerp_weights(n.north);
      lat_w = slerp_weights(n.cross);
    } else {
      lon_w = {1.0 - n.north.t, n.north.t};
      lat_w = {1.0 - n.cross.t, n.cross.t};
    }
    for (int k = 0; k < 4; ++k) st.index.push_back(flat(n.z[k].row, n.z[k].col));
    st.weight.push_back(lon_w[0] * lat_w[0]);
    st.weight.push_back(lon_w[1] * lat_w[0]);
    st.weight.push_back(lon_w[0] * lat_w[1]);
    st.weight.push_back(lon_w[1] * lat_w[1]);
  }
  return st;
}

std::vector<double> apply_stencil(std::span<const double> samples, int channels,
                                  const Stencil& stencil) {
  const std::size_t m = stencil.size();
  std::vector<double> out(m * channels, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* dst = out.data() + i * channels;
    for (int k = 0; k < stencil.taps; ++k) {
      const std::size_t tap = i * stencil.taps + k;
      const double w = stencil.weight[tap];
      const double* src = samples.data() + stencil.index[tap] * channels;
      for (int c = 0; c < channels; ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

LatentGrid geodesic_resample(const LatentGrid& grid, const ErpGrid& src,
                             const CoordGrid& targets) {
  check_matches(grid, src);
  const SourceLattice lattice = SourceLattice::full(src);
  const int d = grid.channels();
  LatentGrid out(targets.rows(), targets.cols(), d);

  std::vector<AxisSample> cols(targets.cols());
  std::vector<std::array<double, 2>> col_w(targets.cols());
  for (int j = 0; j < targets.cols(); ++j) {
    cols[j] = lattice.col_sample(targets.lons[j]);
    col_w[j] = slerp_weights(SlerpSegment{cols[j].delta, cols[j].t});
  }
  std::vector<double> z01(d);
  std::vector<double> z23(d);
  for (int i = 0; i < targets.rows(); ++i) {
    const AxisSample r = lattice.row_sample(targets.lats[i]);
    const auto [ca, cb] = slerp_weights(SlerpSegment{r.delta, r.t});
    for (int j = 0; j < targets.cols(); ++j) {
      const auto [wa, wb] = col_w[j];
      const auto z0 = grid.pixel(r.i0, cols[j].i0);
      const auto z1 = grid.pixel(r.i0, cols[j].i1);
      const auto z2 = grid.pixel(r.i1, cols[j].i0);
      const auto z3 = grid.pixel(r.i1, cols[j].i1);
      auto dst = out.pixel(i, j);
      for (int c = 0; c < d; ++c) {
        z01[c] = wa * z0[c] + wb * z1[c];
        z23[c] = wa * z2[c] + wb * z3[c];
        dst[c] = ca * z01[c] + cb * z23[c];
      }
    }
  }
  return out;
}

LatentGrid bilinear_resample(const LatentGrid& grid, const ErpGrid& src,
                             const CoordGrid& targets) {
  check_matches(grid, src);
  const SourceLattice lattice = SourceLattice::full(src);
  const int d = grid.channels();
  LatentGrid out(targets.rows(), targets.cols(), d);
  std::vector<AxisSample> cols(targets.cols());
  for (int j = 0; j < targets.cols(); ++j) cols[j] = lattice.col_sample(targets.lons[j]);
  for (int i = 0; i < targets.rows(); ++i) {
    const AxisSample r = lattice.row_sample(targets.lats[i]);
    for (int j = 0; j < targets.cols(); ++j) {
      const AxisSample& c = cols[j];
      const auto z0 = grid.pixel(r.i0, c.i0);
      const auto z1 = grid.pixel(r.i0, c.i1);
      const auto z2 = grid.pixel(r.i1, c.i0);
      const auto z3 = grid.pixel(r.i1, c.i1);
      auto dst = out.pixel(i, j);
      for (int k = 0; k < d; ++k) {
        const double top = z0[k] + c.t * (z1[k] - z0[k]);
        const double bottom = z2[k] + c.t * (z3[k] - z2[k]);
        dst[k] = top + r.t * (bottom - top);
      }
    }
  }
  return out;
}

LatentGrid bicubic_resample(const LatentGrid& grid, const ErpGrid& src,
                            const CoordGrid& targets) {
  check_matches(grid, src);
  const SourceLattice lattice = SourceLattice::full(src);
  const int d = grid.channels();
  LatentGrid out(targets.rows(), targets.cols(), d);
  std::vector<CubicAxis> cols(targets.cols());
  for (int j = 0; j < targets.cols(); ++j) cols[j] = cubic_col(lattice, targets.lons[j]);
  std::vector<double> row_acc(d);
  for (int i = 0; i < targets.rows(); ++i) {
    const CubicAxis r = cubic_row(lattice, targets.lats[i]);
    for (int j = 0; j < targets.cols(); ++j) {
      const CubicAxis& c = cols[j];
      auto dst = out.pixel(i, j);
      std::fill(dst.begin(), dst.end(), 0.0);
      for (int a = 0; a < 4; ++a) {
        std::fill(row_acc.begin(), row_acc.end(), 0.0);
        for (int b = 0; b < 4; ++b) {
          const auto z = grid.pixel(r.index[a], c.index[b]);
          for (int k = 0; k < d; ++k) row_acc[k] += c.weight[b] * z[k];
        }
        for (int k = 0; k < d; ++k) dst[k] += r.weight[a] * row_acc[k];
      }
    }
  }
  return out;
}

LatentGrid resample(ResamplerKind kind, const LatentGrid& grid, const ErpGrid& src,
                    const CoordGrid& targets) {
  switch (kind) {
    case ResamplerKind::kGeodesic: return geodesic_resample(grid, src, targets);
    case ResamplerKind::kBilinear: return bilinear_resample(grid, src, targets);
    case ResamplerKind::kBicubic: return bicubic_resample(grid, src, targets);
  }
  throw InputError("unknown resampler");
}

LatentGrid resize_bicubic_planar(const LatentGrid& patch, int out_height, int out_width) {
  if (out_height < 1 || out_width < 1) throw InputError("resize target must be non-empty");
  const int d = patch.channels();
  LatentGrid out(out_height, out_width, d);
  auto position = [](int i, int in, int outn) {
    return snap((i + 0.5) * in / outn - 0.5, in);
  };
  std::vector<CubicAxis> cols(out_width);
  for (int j = 0; j < out_width; ++j) {
    cols[j] = cubic_axis(position(j, patch.width(), out_width), patch.width(), false);
  }
  std::vector<double> row_acc(d);
  for (int i = 0; i < out_height; ++i) {
    const CubicAxis r =
        cubic_axis(position(i, patch.height(), out_height), patch.height(), false);
    for (int j = 0; j < out_width; ++j) {
      auto dst = out.pixel(i, j);
      for (int a = 0; a < 4; ++a) {
        std::fill(row_acc.begin(), row_acc.end(), 0.0);
        for (int b = 0; b < 4; ++b) {
          const auto z = patch.pixel(r.index[a], cols[j].index[b]);
          for (int k = 0; k < d; ++k) row_acc[k] += cols[j].weight[b] * z[k];
        }
        for (int k = 0; k < d; ++k) dst[k] += r.weight[a] * row_acc[k];
      }
    }
  }
  return out;
}

}  // namespace faor
