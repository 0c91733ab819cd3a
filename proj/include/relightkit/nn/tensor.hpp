#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace relightkit::nn {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Single-sample activation: one row per channel, each row a row-major H×W plane.
template <typename Scalar>
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  Mat<Scalar> data;

  Tensor() = default;
  Tensor(int c, int h, int w) : channels(c), height(h), width(w), data(Mat<Scalar>::Zero(c, h * w)) {}
  Tensor(int c, int h, int w, Mat<Scalar> values)
      : channels(c), height(h), width(w), data(std::move(values)) {
    if (data.rows() != c || data.cols() != static_cast<Eigen::Index>(h) * w)
      throw std::invalid_argument("tensor data does not match its shape");
  }

  int spatial() const { return height * width; }
  Eigen::Index size() const { return data.size(); }

  Scalar& operator()(int c, int y, int x) { return data(c, y * width + x); }
  Scalar operator()(int c, int y, int x) const { return data(c, y * width + x); }

  bool same_shape(const Tensor& other) const {
    return channels == other.channels && height == other.height && width == other.width;
  }

  std::string shape_string() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(channels, height, width, data.template cast<Other>());
  }
};

template <typename Scalar>
void require_same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b, const char* what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                                b.shape_string());
}

// Stacks channels of a on top of channels of b.
template <typename Scalar>
Tensor<Scalar> concat_channels(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("concat_channels: spatial mismatch " + a.shape_string() + " vs " +
                                b.shape_string());
  Tensor<Scalar> out(a.channels + b.channels, a.height, a.width);
  out.data.topRows(a.channels) = a.data;
  out.data.bottomRows(b.channels) = b.data;
  return out;
}

template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> split_channels(const Tensor<Scalar>& t, int first) {
  Tensor<Scalar> a(first, t.height, t.width);
  Tensor<Scalar> b(t.channels - first, t.height, t.width);
  a.data = t.data.topRows(first);
  b.data = t.data.bottomRows(t.channels - first);
  return {std::move(a), std::move(b)};
}

}  // namespace relightkit::nn
