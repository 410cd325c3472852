#pragma once

// Image quality metrics for ERP images. Weighted-spherical variants weigh
// each row by cos(latitude) of its pixel centers.

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faor/grid.hpp"

namespace faor {

inline constexpr double kPsnrCap = 99.0;

// A single-channel plane of 8-bit-scale values.
struct Plane {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
};

enum class MetricChannel { kLuma, kRgb };

MetricChannel parse_metric_channel(std::string_view name);

// Each channel of a [0, 1] image rounded to 8 bits (half-up).
std::vector<Plane> to_8bit_planes(const ErpImage& image);

// BT.601 luma 0.299 R + 0.587 G + 0.114 B of the 8-bit-rounded channels.
Plane to_luma_8bit(const ErpImage& image);

std::vector<Plane> metric_planes(const ErpImage& image, MetricChannel channel);

// 10 log10(peak^2 / mse), or kPsnrCap when mse < 1e-10.
double psnr_from_mse(double mse, double peak = 255.0);

double mse(const Plane& a, const Plane& b);
double ws_mse(const Plane& a, const Plane& b);

double psnr(const Plane& a, const Plane& b, double peak = 255.0);
double ws_psnr(const Plane& a, const Plane& b, double peak = 255.0);

// Per-window SSIM (11 x 11 Gaussian, sigma 1.5) over all valid windows,
// averaged with the given weight for each window's center row.
double ssim_weighted(const Plane& a, const Plane& b, std::span<const double> row_weights);
double ssim(const Plane& a, const Plane& b);
double ws_ssim(const Plane& a, const Plane& b);

// The normalized 11-tap Gaussian used by the SSIM window.
std::vector<double> ssim_gaussian();

struct MetricReport {
  double psnr = 0.0;
  double ws_psnr = 0.0;
  double ws_ssim = 0.0;
};

// PSNR figures pool the squared error over the selected channels; SSIM is
// averaged over channels.
MetricReport evaluate(const ErpImage& a, const ErpImage& b,
                      MetricChannel channel = MetricChannel::kLuma);

struct MetricRow {
  std::string name;
  MetricReport report;
};

MetricReport mean_report(std::span<const MetricRow> rows);

// "name,psnr,ws_psnr,ws_ssim" rows followed by a "mean" row.
void write_metric_csv(std::ostream& out, std::span<const MetricRow> rows);
std::string format_metric_table(std::span<const MetricRow> rows);

}  // namespace faor
