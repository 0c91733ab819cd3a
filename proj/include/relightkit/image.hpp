#pragma once

#include "relightkit/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace relightkit {

// 8-bit RGB storage image, interleaved row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  bool same_size(const Image& o) const { return width == o.width && height == o.height; }
  bool empty() const { return pixels.empty(); }
  friend bool operator==(const Image&, const Image&) = default;
};

// [0,255] -> [-1,1] via v/127.5 - 1.
template <typename Scalar>
nn::Tensor<Scalar> normalize(const Image& img) {
  nn::Tensor<Scalar> t(3, img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        t(c, y, x) = static_cast<Scalar>(static_cast<double>(img.at(x, y, c)) / 127.5 - 1.0);
  return t;
}

// Inverse of normalize: rounds to nearest and clamps to [0,255].
template <typename Scalar>
Image denormalize(const nn::Tensor<Scalar>& t) {
  if (t.channels != 3) throw std::invalid_argument("denormalize expects 3 channels, got " + t.shape_string());
  Image img(t.width, t.height);
  for (int y = 0; y < t.height; ++y)
    for (int x = 0; x < t.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::round((static_cast<double>(t(c, y, x)) + 1.0) * 127.5);
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
  return img;
}

// Area-weighted resampling: each output pixel averages the source footprint it covers.
Image resize_area(const Image& src, int width, int height);

Image read_png(const std::filesystem::path& path);
void write_png(const Image& img, const std::filesystem::path& path);

}  // namespace relightkit
