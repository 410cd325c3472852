#include "faor/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "faor/erp_geometry.hpp"
#include "faor/errors.hpp"

namespace faor {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

void check_same(const Plane& a, const Plane& b) {
  if (a.height != b.height || a.width != b.width || a.values.size() != b.values.size()) {
    throw InputError("metric inputs differ in size");
  }
  if (a.height < 1 || a.width < 1) throw InputError("metric inputs are empty");
}

double round_8bit(double v) { return std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5); }

std::vector<double> cos_weights(int height) {
  const ErpGrid grid(height, 1);
  std::vector<double> w(height);
  for (int r = 0; r < height; ++r) w[r] = cos_latitude_weight(grid, r);
  return w;
}

}  // namespace

MetricChannel parse_metric_channel(std::string_view name) {
  if (name == "luma" || name == "y") return MetricChannel::kLuma;
  if (name == "rgb") return MetricChannel::kRgb;
  throw InputError("unknown metric channel '" + std::string(name) + "' (luma | rgb)");
}

std::vector<Plane> to_8bit_planes(const ErpImage& image) {
  std::vector<Plane> planes(image.channels());
  for (int c = 0; c < image.channels(); ++c) {
    planes[c] = Plane{image.height(), image.width(), std::vector<double>(image.pixel_count())};
  }
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    for (int c = 0; c < image.channels(); ++c) {
      planes[c].values[i] = round_8bit(image.values()[i * image.channels() + c]);
    }
  }
  return planes;
}

Plane to_luma_8bit(const ErpImage& image) {
  if (image.channels() != 3) throw InputError("luma needs a 3-channel image");
  Plane y{image.height(), image.width(), std::vector<double>(image.pixel_count())};
  const auto& v = image.values();
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    y.values[i] = 0.299 * round_8bit(v[3 * i]) + 0.587 * round_8bit(v[3 * i + 1]) +
                  0.114 * round_8bit(v[3 * i + 2]);
  }
  return y;
}

std::vector<Plane> metric_planes(const ErpImage& image, MetricChannel channel) {
  if (channel == MetricChannel::kLuma) return {to_luma_8bit(image)};
  return to_8bit_planes(image);
}

double psnr_from_mse(double mse, double peak) {
  if (mse < 1e-10) return kPsnrCap;
  return 10.0 * std::log10(peak * peak / mse);
}

double mse(const Plane& a, const Plane& b) {
  check_same(a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    total += d * d;
  }
  return total / static_cast<double>(a.values.size());
}

double ws_mse(const Plane& a, const Plane& b) {
  check_same(a, b);
  const std::vector<double> w = cos_weights(a.height);
  double num = 0.0;
  double den = 0.0;
  for (int r = 0; r < a.height; ++r) {
    double row = 0.0;
    for (int c = 0; c < a.width; ++c) {
      const double d = a.at(r, c) - b.at(r, c);
      row += d * d;
    }
    num += w[r] * row;
    den += w[r] * a.width;
  }
  return num / den;
}

double psnr(const Plane& a, const Plane& b, double peak) { return psnr_from_mse(mse(a, b), peak); }

double ws_psnr(const Plane& a, const Plane& b, double peak) {
  return psnr_from_mse(ws_mse(a, b), peak);
}

std::vector<double> ssim_gaussian() {
  std::vector<double> g(kWindow);
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    g[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

double ssim_weighted(const Plane& a, const Plane& b, std::span<const double> row_weights) {
  check_same(a, b);
  if (a.height < kWindow || a.width < kWindow) {
    throw InputError("SSIM needs images of at least 11 x 11 pixels");
  }
  if (row_weights.size() != static_cast<std::size_t>(a.height)) {
    throw InputError("SSIM row weights do not match the image height");
  }
  const std::vector<double> g = ssim_gaussian();
  const int oh = a.height - kWindow + 1;
  const int ow = a.width - kWindow + 1;

  // Horizontal pass of the five moment images, then vertical per window.
  const std::size_t n = static_cast<std::size_t>(a.height) * ow;
  std::vector<double> ha(n), hb(n), haa(n), hbb(n), hab(n);
  for (int r = 0; r < a.height; ++r) {
    for (int c = 0; c < ow; ++c) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int k = 0; k < kWindow; ++k) {
        const double x = a.at(r, c + k);
        const double y = b.at(r, c + k);
        sa += g[k] * x;
        sb += g[k] * y;
        saa += g[k] * (x * x);
        sbb += g[k] * (y * y);
        sab += g[k] * (x * y);
      }
      const std::size_t i = static_cast<std::size_t>(r) * ow + c;
      ha[i] = sa;
      hb[i] = sb;
      haa[i] = saa;
      hbb[i] = sbb;
      hab[i] = sab;
    }
  }

  double num = 0.0;
  double den = 0.0;
  for (int r = 0; r < oh; ++r) {
    const double w = row_weights[r + kWindow / 2];
    double row_sum = 0.0;
    for (int c = 0; c < ow; ++c) {
      double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
      for (int k = 0; k < kWindow; ++k) {
        const std::size_t i = static_cast<std::size_t>(r + k) * ow + c;
        ma += g[k] * ha[i];
        mb += g[k] * hb[i];
        maa += g[k] * haa[i];
        mbb += g[k] * hbb[i];
        mab += g[k] * hab[i];
      }
      const double var_a = maa - ma * ma;
      const double var_b = mbb - mb * mb;
      const double cov = mab - ma * mb;
      const double s = ((2.0 * (ma * mb) + kC1) * (2.0 * cov + kC2)) /
                       (((ma * ma) + (mb * mb) + kC1) * (var_a + var_b + kC2));
      row_sum += s;
    }
    num += w * row_sum;
    den += w * ow;
  }
  return num / den;
}

double ssim(const Plane& a, const Plane& b) {
  return ssim_weighted(a, b, std::vector<double>(a.height, 1.0));
}

double ws_ssim(const Plane& a, const Plane& b) {
  return ssim_weighted(a, b, cos_weights(a.height));
}

MetricReport evaluate(const ErpImage& a, const ErpImage& b, MetricChannel channel) {
  if (a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels()) {
    throw InputError("evaluated images differ in size");
  }
  const std::vector<Plane> pa = metric_planes(a, channel);
  const std::vector<Plane> pb = metric_planes(b, channel);
  double m = 0.0;
  double wm = 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    m += mse(pa[i], pb[i]);
    wm += ws_mse(pa[i], pb[i]);
    s += ws_ssim(pa[i], pb[i]);
  }
  const double k = static_cast<double>(pa.size());
  return MetricReport{psnr_from_mse(m / k), psnr_from_mse(wm / k), s / k};
}

MetricReport mean_report(std::span<const MetricRow> rows) {
  MetricReport mean;
  if (rows.empty()) return mean;
  for (const auto& row : rows) {
    mean.psnr += row.report.psnr;
    mean.ws_psnr += row.report.ws_psnr;
    mean.ws_ssim += row.report.ws_ssim;
  }
  const double n = static_cast<double>(rows.size());
  mean.psnr /= n;
  mean.ws_psnr /= n;
  mean.ws_ssim /= n;
  return mean;
}

void write_metric_csv(std::ostream& out, std::span<const MetricRow> rows) {
  char buf[160];
  out << "name,psnr,ws_psnr,ws_ssim\n";
  auto line = [&](const std::string& name, const MetricReport& r) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.8f\n", r.psnr, r.ws_psnr, r.ws_ssim);
    out << name << buf;
  };
  for (const auto& row : rows) line(row.name, row.report);
  line("mean", mean_report(rows));
}

std::string format_metric_table(std::span<const MetricRow> rows) {
  std::size_t width = 4;
  for (const auto& row : rows) width = std::max(width, row.name.size());
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %8s\n", static_cast<int>(width), "image", "PSNR",
                "WS-PSNR", "WS-SSIM");
  out << buf;
  auto line = [&](const std::string& name, const MetricReport& r) {
    std::snprintf(buf, sizeof buf, "%-*s  %9.4f  %9.4f  %8.5f\n", static_cast<int>(width),
                  name.c_str(), r.psnr, r.ws_psnr, r.ws_ssim);
    out << buf;
  };
  for (const auto& row : rows) line(row.name, row.report);
  line("mean", mean_report(rows));
  return out.str();
}

}  // namespace faor
