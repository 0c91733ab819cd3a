#pragma once

// Brute-force reference computations shared by the unit and acceptance tests.

#include "relightkit/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace oracle {

struct Layer {
  int k, s, p, c;
};

inline int propagate(int n, const std::vector<Layer>& layers) {
  for (const auto& l : layers) n = (n + 2 * l.p - l.k) / l.s + 1;
  return n;
}

// Forward counting: a unit at depth L spans jump*(k-1) more input pixels than at depth L-1.
inline int receptive_field(const std::vector<Layer>& layers) {
  int r = 1, jump = 1;
  for (const auto& l : layers) {
    r += (l.k - 1) * jump;
    jump *= l.s;
  }
  return r;
}

inline std::vector<Layer> patch_discriminator(int base = 64) {
  return {{4, 2, 1, base}, {4, 2, 1, base * 2}, {4, 2, 1, base * 4}, {4, 1, 1, base * 8}, {4, 1, 1, 1}};
}

// conv k×k with bias per block, then a linear layer with bias.
inline long classifier_parameters(const std::vector<int>& widths, int kernel, int classes) {
  long total = 0;
  int in = 3;
  for (int w : widths) {
    total += static_cast<long>(w) * in * kernel * kernel + w;
    in = w;
  }
  return total + static_cast<long>(classes) * in + classes;
}

inline double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

inline double psnr(const relightkit::Image& a, const relightkit::Image& b) {
  double sse = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double d = static_cast<double>(a.at(x, y, c)) - static_cast<double>(b.at(x, y, c));
        sse += d * d;
      }
  const double mse = sse / (3.0 * a.width * a.height);
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

inline int circular_distance(int az_a, int az_b) {
  int best = 360;
  for (int turn = -1; turn <= 1; ++turn) best = std::min(best, std::abs(az_a - az_b + 360 * turn));
  return best;
}

// Compass index (0 = N, clockwise) whose displacement best correlates bright pixels with
// dark pixels further from the light. Unit-length steps, bilinear lookups.
inline int direction_from_shading(const relightkit::Image& img, int max_shift = 8) {
  const int w = img.width, h = img.height;
  std::vector<double> lum(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      lum[static_cast<std::size_t>(y) * w + x] = (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2)) / 3.0;
  std::vector<double> sorted = lum;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  const auto at = [&](int x, int y) { return lum[static_cast<std::size_t>(y) * w + x]; };
  const auto bilinear = [&](double x, double y) {
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    return (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x1, y0)) + fy * ((1 - fx) * at(x0, y1) + fx * at(x1, y1));
  };

  int best = 0;
  double best_score = -1;
  for (int d = 0; d < 8; ++d) {
    // azimuth clockwise from north, y down
    const double az = d * std::numbers::pi / 4;
    const double ux = std::sin(az), uy = -std::cos(az);
    double score = 0;
    for (int r = 1; r <= max_shift; ++r)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double qx = x - r * ux, qy = y - r * uy;
          if (qx < 0 || qy < 0 || qx > w - 1 || qy > h - 1) continue;
          const double bright = std::max(at(x, y) - median, 0.0);
          if (bright == 0.0) continue;
          score += bright * std::max(median - bilinear(qx, qy), 0.0);
        }
    if (score > best_score) {
      best_score = score;
      best = d;
    }
  }
  return best;
}

// Half-image mean brightness (left, right).
inline std::array<double, 2> half_means(const relightkit::Image& img) {
  std::array<double, 2> sum{0, 0};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) sum[x < img.width / 2 ? 0 : 1] += img.at(x, y, c);
  const double count = 3.0 * (img.width / 2) * img.height;
  return {sum[0] / count, sum[1] / count};
}

}  // namespace oracle
