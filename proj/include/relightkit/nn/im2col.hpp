#pragma once

#include "relightkit/nn/tensor.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>
#include <string>

namespace relightkit::nn {

// Output extent of a convolution along one axis; throws if the kernel does not fit.
inline int conv_output_size(int input, int kernel, int stride, int padding) {
  if (kernel < 1 || stride < 1 || padding < 0)
    throw std::invalid_argument("invalid convolution parameters");
  const int span = input + 2 * padding - kernel;
  if (span < 0)
    throw std::invalid_argument("kernel " + std::to_string(kernel) + " does not fit input " +
                                std::to_string(input) + " with padding " + std::to_string(padding));
  return span / stride + 1;
}

// Transposed convolution maps out -> in of the matching forward convolution.
inline int conv_transpose_output_size(int input, int kernel, int stride, int padding) {
  const int out = (input - 1) * stride - 2 * padding + kernel;
  if (out < 1) throw std::invalid_argument("transposed convolution produces empty output");
  return out;
}

struct ConvGeometry {
  int channels = 0;  // channels of the "image" side
  int height = 0;
  int width = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int out_height = 0;
  int out_width = 0;

  int patch_rows() const { return channels * kernel * kernel; }
  int out_spatial() const { return out_height * out_width; }
};

// Output columns [lo, hi) whose input column ox*stride - padding + kx lies inside [0, width).
inline std::pair<int, int> valid_output_range(const ConvGeometry& g, int kx) {
  const int offset = kx - g.padding;
  int lo = offset >= 0 ? 0 : (-offset + g.stride - 1) / g.stride;
  int hi = g.width - 1 - offset < 0 ? 0 : (g.width - 1 - offset) / g.stride + 1;
  lo = std::min(lo, g.out_width);
  hi = std::clamp(hi, lo, g.out_width);
  return {lo, hi};
}

// Rows are (channel, ky, kx) patch entries, columns are output positions.
template <typename Scalar>
Mat<Scalar> im2col(const Tensor<Scalar>& x, const ConvGeometry& g) {
  Mat<Scalar> cols(g.patch_rows(), g.out_spatial());
  const int k = g.kernel;
  for (int c = 0; c < g.channels; ++c) {
    const Scalar* plane = x.data.row(c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        Scalar* dst = cols.row((c * k + ky) * k + kx).data();
        const auto [lo, hi] = valid_output_range(g, kx);
        const int offset = kx - g.padding;
        for (int oy = 0; oy < g.out_height; ++oy) {
          const int iy = oy * g.stride - g.padding + ky;
          Scalar* row = dst + oy * g.out_width;
          if (iy < 0 || iy >= g.height) {
            std::fill(row, row + g.out_width, Scalar(0));
            continue;
          }
          const Scalar* src = plane + iy * g.width + offset;
          std::fill(row, row + lo, Scalar(0));
          if (g.stride == 1) {
            std::copy(src + lo, src + hi, row + lo);
          } else {
            for (int ox = lo; ox < hi; ++ox) row[ox] = src[ox * g.stride];
          }
          std::fill(row + hi, row + g.out_width, Scalar(0));
        }
      }
    }
  }
  return cols;
}

// Adjoint of im2col: scatters-and-adds patch entries back onto the image grid.
template <typename Scalar>
Tensor<Scalar> col2im(const Mat<Scalar>& cols, const ConvGeometry& g) {
  Tensor<Scalar> out(g.channels, g.height, g.width);
  const int k = g.kernel;
  for (int c = 0; c < g.channels; ++c) {
    Scalar* plane = out.data.row(c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Scalar* src = cols.row((c * k + ky) * k + kx).data();
        const auto [lo, hi] = valid_output_range(g, kx);
        const int offset = kx - g.padding;
        for (int oy = 0; oy < g.out_height; ++oy) {
          const int iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= g.height) continue;
          Scalar* dst = plane + iy * g.width + offset;
          const Scalar* row = src + oy * g.out_width;
          for (int ox = lo; ox < hi; ++ox) dst[ox * g.stride] += row[ox];
        }
      }
    }
  }
  return out;
}

}  // namespace relightkit::nn
