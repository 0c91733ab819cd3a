#include "relightkit/dataset.hpp"

#include "relightkit/nn/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace relightkit {

namespace {

using HeightMap = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Scene {
  HeightMap height;
  Eigen::Array3d albedo;
};

Scene build_scene(const SyntheticSceneSpec& spec) {
  nn::Rng rng(nn::derive_seed(spec.seed, 0));
  const int n = spec.size;
  Scene scene;
  scene.height = HeightMap::Zero(n, n);
  for (int b = 0; b < spec.bumps; ++b) {
    const double cx = nn::uniform(rng, 0.0, n);
    const double cy = nn::uniform(rng, 0.0, n);
    const double sigma = nn::uniform(rng, 0.05, 0.15) * n;
    const double amplitude = nn::uniform(rng, 0.05, 0.2) * n;
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double dx = x - cx, dy = y - cy;
        scene.height(y, x) += amplitude * std::exp(-(dx * dx + dy * dy) * inv);
      }
  }
  for (int c = 0; c < 3; ++c) scene.albedo[c] = nn::uniform(rng, 0.55, 1.0);
  return scene;
}

// Central differences inside, one-sided at the border.
double slope(const HeightMap& h, int y, int x, bool along_x) {
  const int n = along_x ? static_cast<int>(h.cols()) : static_cast<int>(h.rows());
  const int i = along_x ? x : y;
  auto at = [&](int k) { return along_x ? h(y, k) : h(k, x); };
  if (n == 1) return 0.0;
  if (i == 0) return at(1) - at(0);
  if (i == n - 1) return at(n - 1) - at(n - 2);
  return 0.5 * (at(i + 1) - at(i - 1));
}

double sample_bilinear(const HeightMap& h, double y, double x) {
  const int n = static_cast<int>(h.rows());
  const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, n - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, n - 1);
  const int x1 = std::min(x0 + 1, n - 1), y1 = std::min(y0 + 1, n - 1);
  const double fx = x - x0, fy = y - y0;
  return (1 - fy) * ((1 - fx) * h(y0, x0) + fx * h(y0, x1)) + fy * ((1 - fx) * h(y1, x0) + fx * h(y1, x1));
}

}  // namespace

Image generate_synthetic_scene(const SyntheticSceneSpec& spec, Direction light) {
  if (spec.size < 16) throw std::invalid_argument("synthetic scene size must be at least 16");
  if (spec.bumps < 0) throw std::invalid_argument("bump count must be non-negative");
  const Scene scene = build_scene(spec);
  const int n = spec.size;

  // x to the right (East), y down (South), z up; azimuth measured clockwise from North.
  const double azimuth = azimuth_deg(light) * std::numbers::pi / 180.0;
  const double elevation = kLightElevationDeg * std::numbers::pi / 180.0;
  const Eigen::Vector3d to_light(std::cos(elevation) * std::sin(azimuth), -std::cos(elevation) * std::cos(azimuth),
                                 std::sin(elevation));
  const double step_x = std::sin(azimuth), step_y = -std::cos(azimuth);
  const double rise = std::tan(elevation);

  Image img(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const Eigen::Vector3d normal =
          Eigen::Vector3d(-slope(scene.height, y, x, true), -slope(scene.height, y, x, false), 1.0).normalized();
      double shade = std::max(0.0, normal.dot(to_light));
      if (shade > 0.0) {
        const double h0 = scene.height(y, x);
        for (int k = 1;; ++k) {
          const double px = x + step_x * k, py = y + step_y * k;
          if (px < 0 || py < 0 || px > n - 1 || py > n - 1) break;
          if (sample_bilinear(scene.height, py, px) > h0 + rise * k + 1e-9) {
            shade = 0.0;
            break;
          }
        }
      }
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::round(255.0 * scene.albedo[c] * shade), 0.0, 255.0));
    }
  }
  return img;
}

std::vector<RawSample> generate_synthetic_dataset(int scenes, int size, std::uint64_t seed, int bumps) {
  if (scenes < 1) throw std::invalid_argument("scene count must be positive");
  std::vector<RawSample> out;
  out.reserve(static_cast<std::size_t>(scenes) * 8);
  for (int i = 0; i < scenes; ++i) {
    const SyntheticSceneSpec spec{nn::derive_seed(seed, static_cast<std::uint64_t>(i)), size, bumps};
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%04d", i);
    for (Direction d : kAllDirections) {
      RawSample s;
      s.meta.scene_id = id;
      s.meta.temperature_k = kDefaultTemperatureK;
      s.meta.source = d;
      s.image = generate_synthetic_scene(spec, d);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace relightkit
