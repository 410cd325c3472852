#include "faor/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "faor/errors.hpp"

namespace faor {
namespace {

using Vec3 = std::array<double, 3>;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 unit_vector(double lat, double lon) {
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v{n(rng), n(rng), n(rng)};
  const double len = std::sqrt(dot(v, v));
  return {v[0] / len, v[1] / len, v[2] / len};
}

enum class Pattern { kStripes, kChecker, kRings };

struct Cap {
  Vec3 center;
  double cos_radius;
  Pattern pattern;
  Vec3 axis_a;
  Vec3 axis_b;
  double frequency;
  double phase;
  Vec3 color_a;
  Vec3 color_b;
};

Vec3 random_color(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  return {u(rng), u(rng), u(rng)};
}

Vec3 mix(const Vec3& a, const Vec3& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

}  // namespace

TrainImage make_synthetic_odi(std::uint64_t seed, const SyntheticOptions& options) {
  if (options.height < 1 || options.width < 1 || options.supersample < 1 ||
      options.min_objects < 0 || options.max_objects < options.min_objects ||
      !(options.min_frequency > 0.0) || !(options.max_frequency >= options.min_frequency)) {
    throw InputError("invalid synthetic image options");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  const Vec3 sky_top = random_color(rng);
  const Vec3 sky_bottom = random_color(rng);
  const double sky_freq = 10.0 + 30.0 * u01(rng);
  const Vec3 sky_axis = random_direction(rng);

  std::uniform_int_distribution<int> count_dist(options.min_objects, options.max_objects);
  std::vector<Cap> caps(count_dist(rng));
  for (auto& cap : caps) {
    cap.center = random_direction(rng);
    cap.cos_radius = std::cos(0.25 + 0.6 * u01(rng));
    cap.pattern = static_cast<Pattern>(std::uniform_int_distribution<int>(0, 2)(rng));
    cap.axis_a = random_direction(rng);
    cap.axis_b = random_direction(rng);
    cap.frequency =
        options.min_frequency + (options.max_frequency - options.min_frequency) * u01(rng);
    cap.phase = kTwoPi * u01(rng);
    cap.color_a = random_color(rng);
    cap.color_b = random_color(rng);
  }

  const int h = options.height;
  const int w = options.width;
  const int ss = options.supersample;
  const ErpGrid grid(h, w);
  TrainImage out{ErpImage(h, w, 3), std::vector<std::uint16_t>(grid.pixel_count(), 0)};

  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      Vec3 acc{0.0, 0.0, 0.0};
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double fr = row + (sy + 0.5) / ss - 0.5;
          const double fc = col + (sx + 0.5) / ss - 0.5;
          const double lat = (0.5 - (fr + 0.5) / h) * kPi;
          const double lon = ((fc + 0.5) / w - 0.5) * kTwoPi;
          const Vec3 p = unit_vector(lat, lon);

          const double g = 0.5 + 0.5 * std::sin(lat);
          Vec3 c = mix(sky_bottom, sky_top, g);
          const double ripple = 0.06 * std::sin(sky_freq * dot(p, sky_axis));
          c = {c[0] + ripple, c[1] + ripple, c[2] + ripple};

          for (const Cap& cap : caps) {
            if (dot(p, cap.center) < cap.cos_radius) continue;
            double t = 0.0;
            switch (cap.pattern) {
              case Pattern::kStripes:
                t = 0.5 + 0.5 * std::sin(cap.frequency * dot(p, cap.axis_a) + cap.phase);
                break;
              case Pattern::kChecker:
                t = std::sin(cap.frequency * dot(p, cap.axis_a) + cap.phase) *
                                std::sin(cap.frequency * dot(p, cap.axis_b)) >
                            0.0
                        ? 1.0
                        : 0.0;
                break;
              case Pattern::kRings: {
                const double ang = std::acos(std::clamp(dot(p, cap.center), -1.0, 1.0));
                t = std::fmod(ang * cap.frequency + cap.phase, kTwoPi) < kPi ? 1.0 : 0.0;
                break;
              }
            }
            c = mix(cap.color_a, cap.color_b, t);
          }
          for (int k = 0; k < 3; ++k) acc[k] += c[k];
        }
      }
      const double inv = 1.0 / (ss * ss);
      for (int k = 0; k < 3; ++k) out.image.at(row, col, k) = std::clamp(acc[k] * inv, 0.0, 1.0);

      const double lat = (0.5 - (row + 0.5) / h) * kPi;
      const double lon = ((col + 0.5) / w - 0.5) * kTwoPi;
      const Vec3 p = unit_vector(lat, lon);
      std::uint16_t id = 0;
      for (std::size_t k = 0; k < caps.size(); ++k) {
        if (dot(p, caps[k].center) >= caps[k].cos_radius) id = static_cast<std::uint16_t>(k + 1);
      }
      out.instances[static_cast<std::size_t>(row) * w + col] = id;
    }
  }
  return out;
}

std::vector<TrainImage> make_synthetic_set(int count, std::uint64_t seed,
                                           const SyntheticOptions& options) {
  if (count < 0) throw InputError("image count must be non-negative");
  std::vector<TrainImage> set;
  set.reserve(count);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) set.push_back(make_synthetic_odi(rng(), options));
  return set;
}

}  // namespace faor
