#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "faor/errors.hpp"
#include "faor/metrics.hpp"

namespace faor {
namespace {

constexpr double kPiRef = 3.14159265358979323846;

ErpImage random_image(int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  ErpImage img(h, w, 3);
  for (double& v : img.values()) v = u(rng);
  return img;
}

// Image whose 8-bit values are integers in [0, 239].
ErpImage integer_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 239);
  ErpImage img(h, w, 3);
  for (double& v : img.values()) v = u(rng) / 255.0;
  return img;
}

ErpImage offset(const ErpImage& img, int levels) {
  ErpImage out = img;
  for (double& v : out.values()) v += levels / 255.0;
  return out;
}

Plane random_plane(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  Plane p{h, w, std::vector<double>(static_cast<std::size_t>(h) * w)};
  for (double& v : p.values) v = u(rng);
  return p;
}

// WS-PSNR written directly from its definition, with the weight of row j
// equal to cos((j + 0.5 - H/2) * pi / H).
double ws_psnr_loop(const Plane& a, const Plane& b) {
  long double num = 0.0L, den = 0.0L;
  for (int j = 0; j < a.height; ++j) {
    const long double w = std::cos((j + 0.5L - a.height / 2.0L) * kPiRef / a.height);
    for (int i = 0; i < a.width; ++i) {
      const long double d = a.at(j, i) - b.at(j, i);
      num += w * d * d;
      den += w;
    }
  }
  return static_cast<double>(10.0L * std::log10(255.0L * 255.0L / (num / den)));
}

double psnr_loop(const Plane& a, const Plane& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const long double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return static_cast<double>(10.0L * std::log10(255.0L * 255.0L / (s / a.values.size())));
}

// Windowed SSIM evaluated with a full 2-D Gaussian per window.
double ssim_loop(const Plane& a, const Plane& b, const std::vector<double>& row_w) {
  double g1[11];
  double gs = 0.0;
  for (int k = 0; k < 11; ++k) {
    g1[k] = std::exp(-((k - 5) * (k - 5)) / (2.0 * 1.5 * 1.5));
    gs += g1[k];
  }
  for (double& v : g1) v /= gs;
  const double c1 = 6.5025, c2 = 58.5225;
  double num = 0.0, den = 0.0;
  for (int r = 0; r + 11 <= a.height; ++r) {
    for (int c = 0; c + 11 <= a.width; ++c) {
      double ma = 0, mb = 0;
      for (int y = 0; y < 11; ++y) {
        for (int x = 0; x < 11; ++x) {
          ma += g1[y] * g1[x] * a.at(r + y, c + x);
          mb += g1[y] * g1[x] * b.at(r + y, c + x);
        }
      }
      double va = 0, vb = 0, cov = 0;
      for (int y = 0; y < 11; ++y) {
        for (int x = 0; x < 11; ++x) {
          const double da = a.at(r + y, c + x) - ma;
          const double db = b.at(r + y, c + x) - mb;
          va += g1[y] * g1[x] * da * da;
          vb += g1[y] * g1[x] * db * db;
          cov += g1[y] * g1[x] * da * db;
        }
      }
      const double s = ((2 * ma * mb + c1) * (2 * cov + c2)) /
                       ((ma * ma + mb * mb + c1) * (va + vb + c2));
      num += row_w[r + 5] * s;
      den += row_w[r + 5];
    }
  }
  return num / den;
}

TEST(Psnr, ConstantOffsetOfSixteenLevels) {
  const ErpImage a = integer_image(32, 64, 1);
  const ErpImage b = offset(a, 16);
  for (auto ch : {MetricChannel::kLuma, MetricChannel::kRgb}) {
    const MetricReport r = evaluate(a, b, ch);
    EXPECT_NEAR(r.psnr, 24.048, 1e-3);
    EXPECT_NEAR(r.ws_psnr, 24.048, 1e-3);
    EXPECT_NEAR(r.psnr, 20.0 * std::log10(255.0 / 16.0), 1e-9);
  }
}

TEST(Psnr, MatchesLoopOracles) {
  for (auto [h, w] : {std::pair{16, 32}, std::pair{31, 64}, std::pair{128, 256}}) {
    const Plane a = random_plane(h, w, h);
    const Plane b = random_plane(h, w, w);
    EXPECT_NEAR(ws_psnr(a, b), ws_psnr_loop(a, b), 1e-10);
    EXPECT_NEAR(psnr(a, b), psnr_loop(a, b), 1e-10);
  }
}

TEST(Psnr, SymmetricAndCapped) {
  const Plane a = random_plane(12, 24, 3);
  const Plane b = random_plane(12, 24, 4);
  EXPECT_EQ(ws_psnr(a, b), ws_psnr(b, a));
  EXPECT_EQ(psnr(a, a), kPsnrCap);
  EXPECT_EQ(ws_psnr(a, a), kPsnrCap);
  EXPECT_EQ(psnr_from_mse(0.0), kPsnrCap);
  EXPECT_NEAR(psnr_from_mse(1.0), 48.130803608679, 1e-9);
}

TEST(Psnr, WeightingEmphasizesTheEquator) {
  // The same error on a polar row costs less WS-PSNR than on an equatorial row.
  const Plane a{8, 8, std::vector<double>(64, 100.0)};
  Plane polar = a, equator = a;
  for (int c = 0; c < 8; ++c) {
    polar.values[c] += 10.0;
    equator.values[3 * 8 + c] += 10.0;
  }
  EXPECT_EQ(psnr(a, polar), psnr(a, equator));
  EXPECT_GT(ws_psnr(a, polar), ws_psnr(a, equator));
}

TEST(Ssim, IdenticalImagesGiveExactlyOne) {
  const ErpImage a = random_image(40, 80, 5);
  EXPECT_EQ(evaluate(a, a).ws_ssim, 1.0);
  const Plane p = random_plane(20, 30, 6);
  EXPECT_EQ(ws_ssim(p, p), 1.0);
  EXPECT_EQ(ssim(p, p), 1.0);
}

TEST(Ssim, MatchesTwoDimensionalWindowOracle) {
  const Plane a = random_plane(24, 30, 7);
  Plane b = a;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 12.0);
  for (double& v : b.values) v = std::clamp(v + n(rng), 0.0, 255.0);
  std::vector<double> unit(24, 1.0), cosw(24);
  for (int r = 0; r < 24; ++r) cosw[r] = std::cos((0.5 - (r + 0.5) / 24.0) * kPiRef);
  EXPECT_NEAR(ssim(a, b), ssim_loop(a, b, unit), 1e-12);
  EXPECT_NEAR(ws_ssim(a, b), ssim_loop(a, b, cosw), 1e-12);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-15);
  EXPECT_LT(ws_ssim(a, b), 1.0);
}

TEST(Ssim, UniformWeightsReduceToPlainSsim) {
  const Plane a = random_plane(16, 16, 9);
  const Plane b = random_plane(16, 16, 10);
  EXPECT_EQ(ssim_weighted(a, b, std::vector<double>(16, 3.0)), ssim(a, b));
}

TEST(Ssim, GaussianWindow) {
  const auto g = ssim_gaussian();
  ASSERT_EQ(g.size(), 11u);
  double s = 0.0;
  for (double v : g) s += v;
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_EQ(g[0], g[10]);
  EXPECT_NEAR(g[5] / g[4], std::exp(1.0 / 4.5), 1e-14);
}

TEST(Ssim, RejectsSmallOrMismatchedPlanes) {
  const Plane small = random_plane(8, 30, 1);
  EXPECT_THROW(ssim(small, small), InputError);
  EXPECT_THROW(ssim(random_plane(12, 12, 1), random_plane(12, 13, 1)), InputError);
  EXPECT_THROW(ssim_weighted(random_plane(12, 12, 1), random_plane(12, 12, 1),
                             std::vector<double>(3, 1.0)),
               InputError);
}

TEST(Planes, EightBitRoundingAndLuma) {
  ErpImage img(1, 2, 3);
  img.at(0, 0, 0) = 0.5;              // 127.5 rounds up
  img.at(0, 0, 1) = 1.2;              // clamps
  img.at(0, 0, 2) = -0.1;             // clamps
  img.at(0, 1, 0) = 10.4 / 255.0;     // 10
  img.at(0, 1, 1) = 10.6 / 255.0;     // 11
  img.at(0, 1, 2) = 1.0;
  const auto planes = to_8bit_planes(img);
  EXPECT_EQ(planes[0].values, (std::vector<double>{128, 10}));
  EXPECT_EQ(planes[1].values, (std::vector<double>{255, 11}));
  EXPECT_EQ(planes[2].values, (std::vector<double>{0, 255}));
  const Plane y = to_luma_8bit(img);
  EXPECT_NEAR(y.values[0], 0.299 * 128 + 0.587 * 255, 1e-12);
  EXPECT_NEAR(y.values[1], 0.299 * 10 + 0.587 * 11 + 0.114 * 255, 1e-12);
  EXPECT_EQ(metric_planes(img, MetricChannel::kRgb).size(), 3u);
  EXPECT_EQ(metric_planes(img, MetricChannel::kLuma).size(), 1u);
  EXPECT_EQ(parse_metric_channel("y"), MetricChannel::kLuma);
  EXPECT_EQ(parse_metric_channel("rgb"), MetricChannel::kRgb);
  EXPECT_THROW(parse_metric_channel("lab"), InputError);
}

TEST(Reports, CsvAndTable) {
  const std::vector<MetricRow> rows{{"a", {30.0, 31.0, 0.9}}, {"b", {32.0, 33.0, 0.8}}};
  const MetricReport m = mean_report(rows);
  EXPECT_EQ(m.psnr, 31.0);
  EXPECT_EQ(m.ws_psnr, 32.0);
  EXPECT_NEAR(m.ws_ssim, 0.85, 1e-15);
  std::ostringstream csv;
  write_metric_csv(csv, rows);
  EXPECT_EQ(csv.str(),
            "name,psnr,ws_psnr,ws_ssim\n"
            "a,30.000000,31.000000,0.90000000\n"
            "b,32.000000,33.000000,0.80000000\n"
            "mean,31.000000,32.000000,0.85000000\n");
  const std::string table = format_metric_table(rows);
  EXPECT_NE(table.find("WS-PSNR"), std::string::npos);
  EXPECT_NE(table.find("mean"), std::string::npos);
}

TEST(Evaluate, RejectsMismatchedImages) {
  EXPECT_THROW(evaluate(ErpImage(16, 32, 3), ErpImage(16, 30, 3)), InputError);
}

}  // namespace
}  // namespace faor
