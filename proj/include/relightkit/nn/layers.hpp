#pragma once

#include "relightkit/nn/im2col.hpp"
#include "relightkit/nn/random.hpp"
#include "relightkit/nn/tensor.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace relightkit::nn {

template <typename Scalar>
struct Parameter {
  std::string name;
  Mat<Scalar> value;
  Mat<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Mat<Scalar>::Zero(rows, cols)), grad(Mat<Scalar>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

template <typename Scalar>
using ParameterList = std::vector<Parameter<Scalar>*>;

template <typename Scalar>
void fill_normal(Mat<Scalar>& m, double stddev, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<Scalar>(stddev * standard_normal(rng));
}

enum class Activation { none, leaky_relu, relu, tanh, sigmoid };
enum class Norm { none, instance };

inline constexpr double kLeakySlope = 0.2;

template <typename Scalar>
void activate(Mat<Scalar>& x, Activation act) {
  switch (act) {
    case Activation::none: break;
    case Activation::leaky_relu:
      x = x.unaryExpr([](Scalar v) { return v > Scalar(0) ? v : Scalar(kLeakySlope) * v; });
      break;
    case Activation::relu: x = x.cwiseMax(Scalar(0)); break;
    case Activation::tanh: x = x.array().tanh().matrix(); break;
    case Activation::sigmoid:
      x = x.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
      break;
  }
}

// Gradient through an activation, expressed in terms of its output y.
template <typename Scalar>
Mat<Scalar> activation_backward(const Mat<Scalar>& dy, const Mat<Scalar>& y, Activation act) {
  switch (act) {
    case Activation::none: return dy;
    case Activation::leaky_relu:
      return dy.binaryExpr(y, [](Scalar g, Scalar v) { return v > Scalar(0) ? g : Scalar(kLeakySlope) * g; });
    case Activation::relu:
      return dy.binaryExpr(y, [](Scalar g, Scalar v) { return v > Scalar(0) ? g : Scalar(0); });
    case Activation::tanh: return (dy.array() * (Scalar(1) - y.array().square())).matrix();
    case Activation::sigmoid: return (dy.array() * y.array() * (Scalar(1) - y.array())).matrix();
  }
  return dy;
}

template <typename Scalar>
class Conv2d {
 public:
  struct Cache {
    Mat<Scalar> cols;
    ConvGeometry geometry;
  };

  Conv2d() = default;
  Conv2d(const std::string& name, int in_channels, int out_channels, int kernel, int stride, int padding)
      : weight(name + ".weight", out_channels, in_channels * kernel * kernel),
        bias(name + ".bias", out_channels, 1),
        in_channels_(in_channels),
        out_channels_(out_channels),
        kernel_(kernel),
        stride_(stride),
        padding_(padding) {}

  ConvGeometry geometry_for(int height, int width) const {
    return {in_channels_, height, width, kernel_, stride_, padding_,
            conv_output_size(height, kernel_, stride_, padding_),
            conv_output_size(width, kernel_, stride_, padding_)};
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& cache) const {
    if (x.channels != in_channels_)
      throw std::invalid_argument(weight.name + ": expected " + std::to_string(in_channels_) +
                                  " input channels, got " + std::to_string(x.channels));
    cache.geometry = geometry_for(x.height, x.width);
    cache.cols = im2col(x, cache.geometry);
    Tensor<Scalar> y(out_channels_, cache.geometry.out_height, cache.geometry.out_width);
    y.data.noalias() = weight.value * cache.cols;
    y.data.colwise() += bias.value.col(0);
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& cache, bool input_grad = true) {
    weight.grad.noalias() += dy.data * cache.cols.transpose();
    bias.grad.col(0) += dy.data.rowwise().sum();
    if (!input_grad) return {};
    Mat<Scalar> dcols = weight.value.transpose() * dy.data;
    return col2im(dcols, cache.geometry);
  }

  ParameterList<Scalar> parameters() { return {&weight, &bias}; }

  void init_normal(double stddev, Rng& rng) {
    fill_normal(weight.value, stddev, rng);
    bias.value.setZero();
  }
  double fan_in() const { return static_cast<double>(in_channels_) * kernel_ * kernel_; }

  Parameter<Scalar> weight;
  Parameter<Scalar> bias;

 private:
  int in_channels_ = 0;
  int out_channels_ = 0;
  int kernel_ = 1;
  int stride_ = 1;
  int padding_ = 0;
};

// Upsampling convolution; forward is the input-adjoint of a Conv2d with the same geometry.
template <typename Scalar>
class ConvTranspose2d {
 public:
  struct Cache {
    Mat<Scalar> input;
    ConvGeometry geometry;
  };

  ConvTranspose2d() = default;
  ConvTranspose2d(const std::string& name, int in_channels, int out_channels, int kernel, int stride,
                  int padding)
      : weight(name + ".weight", in_channels, out_channels * kernel * kernel),
        bias(name + ".bias", out_channels, 1),
        in_channels_(in_channels),
        out_channels_(out_channels),
        kernel_(kernel),
        stride_(stride),
        padding_(padding) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& cache) const {
    if (x.channels != in_channels_)
      throw std::invalid_argument(weight.name + ": expected " + std::to_string(in_channels_) +
                                  " input channels, got " + std::to_string(x.channels));
    const int oh = conv_transpose_output_size(x.height, kernel_, stride_, padding_);
    const int ow = conv_transpose_output_size(x.width, kernel_, stride_, padding_);
    cache.geometry = {out_channels_, oh, ow, kernel_, stride_, padding_, x.height, x.width};
    if (conv_output_size(oh, kernel_, stride_, padding_) != x.height ||
        conv_output_size(ow, kernel_, stride_, padding_) != x.width)
      throw std::invalid_argument(weight.name + ": geometry is not invertible");
    cache.input = x.data;
    Mat<Scalar> cols = weight.value.transpose() * x.data;
    Tensor<Scalar> y = col2im(cols, cache.geometry);
    y.data.colwise() += bias.value.col(0);
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& cache, bool input_grad = true) {
    Mat<Scalar> dcols = im2col(dy, cache.geometry);
    weight.grad.noalias() += cache.input * dcols.transpose();
    bias.grad.col(0) += dy.data.rowwise().sum();
    if (!input_grad) return {};
    Tensor<Scalar> dx(in_channels_, cache.geometry.out_height, cache.geometry.out_width);
    dx.data.noalias() = weight.value * dcols;
    return dx;
  }

  ParameterList<Scalar> parameters() { return {&weight, &bias}; }

  void init_normal(double stddev, Rng& rng) {
    fill_normal(weight.value, stddev, rng);
    bias.value.setZero();
  }

  Parameter<Scalar> weight;
  Parameter<Scalar> bias;

 private:
  int in_channels_ = 0;
  int out_channels_ = 0;
  int kernel_ = 1;
  int stride_ = 1;
  int padding_ = 0;
};

// Per-channel normalization over the spatial extent, no affine parameters.
template <typename Scalar>
struct InstanceNorm {
  struct Cache {
    Mat<Scalar> normalized;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std;
  };

  static constexpr double kEpsilon = 1e-5;

  static Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& cache) {
    const Scalar n = static_cast<Scalar>(x.spatial());
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean = x.data.rowwise().sum() / n;
    Tensor<Scalar> y(x.channels, x.height, x.width);
    y.data = x.data.colwise() - mean;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> var = y.data.array().square().rowwise().sum().matrix() / n;
    cache.inv_std = (var.array() + Scalar(kEpsilon)).rsqrt().matrix();
    y.data = cache.inv_std.asDiagonal() * y.data;
    cache.normalized = y.data;
    return y;
  }

  static Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& cache) {
    const Scalar n = static_cast<Scalar>(dy.spatial());
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean_dy = dy.data.rowwise().sum() / n;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean_dy_xhat =
        dy.data.cwiseProduct(cache.normalized).rowwise().sum() / n;
    Tensor<Scalar> dx(dy.channels, dy.height, dy.width);
    dx.data = dy.data.colwise() - mean_dy;
    dx.data -= mean_dy_xhat.asDiagonal() * cache.normalized;
    dx.data = cache.inv_std.asDiagonal() * dx.data;
    return dx;
  }
};

template <typename Scalar>
struct Dropout {
  struct Cache {
    Mat<Scalar> mask;
  };

  static Tensor<Scalar> forward(const Tensor<Scalar>& x, double rate, Rng& rng, Cache& cache) {
    const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate));
    cache.mask.resize(x.data.rows(), x.data.cols());
    for (Eigen::Index i = 0; i < cache.mask.size(); ++i)
      cache.mask.data()[i] = uniform01(rng) < rate ? Scalar(0) : keep_scale;
    Tensor<Scalar> y = x;
    y.data.array() *= cache.mask.array();
    return y;
  }

  static Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& cache) {
    Tensor<Scalar> dx = dy;
    if (cache.mask.size() == dy.data.size()) dx.data.array() *= cache.mask.array();
    return dx;
  }
};

// 2×2 max pooling with stride 2.
template <typename Scalar>
struct MaxPool2 {
  struct Cache {
    std::vector<int> argmax;
    int in_height = 0;
    int in_width = 0;
  };

  static Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache& cache) {
    if (x.height % 2 != 0 || x.width % 2 != 0)
      throw std::invalid_argument("max pool needs even spatial size, got " + x.shape_string());
    const int oh = x.height / 2, ow = x.width / 2;
    Tensor<Scalar> y(x.channels, oh, ow);
    cache.argmax.assign(static_cast<std::size_t>(x.channels) * oh * ow, 0);
    cache.in_height = x.height;
    cache.in_width = x.width;
    for (int c = 0; c < x.channels; ++c) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          int best = (2 * oy) * x.width + 2 * ox;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const int idx = (2 * oy + dy) * x.width + 2 * ox + dx;
              if (x.data(c, idx) > x.data(c, best)) best = idx;
            }
          y.data(c, oy * ow + ox) = x.data(c, best);
          cache.argmax[(static_cast<std::size_t>(c) * oh + oy) * ow + ox] = best;
        }
      }
    }
    return y;
  }

  static Tensor<Scalar> backward(const Tensor<Scalar>& dy, const Cache& cache) {
    Tensor<Scalar> dx(dy.channels, cache.in_height, cache.in_width);
    const int n = dy.spatial();
    for (int c = 0; c < dy.channels; ++c)
      for (int i = 0; i < n; ++i)
        dx.data(c, cache.argmax[static_cast<std::size_t>(c) * n + i]) += dy.data(c, i);
    return dx;
  }
};

template <typename Scalar>
class Linear {
 public:
  struct Cache {
    Mat<Scalar> input;
  };

  Linear() = default;
  Linear(const std::string& name, int in_features, int out_features)
      : weight(name + ".weight", out_features, in_features), bias(name + ".bias", out_features, 1) {}

  // x is a column (in_features × 1).
  Mat<Scalar> forward(const Mat<Scalar>& x, Cache& cache) const {
    if (x.rows() != weight.value.cols())
      throw std::invalid_argument(weight.name + ": expected " + std::to_string(weight.value.cols()) +
                                  " features, got " + std::to_string(x.rows()));
    cache.input = x;
    Mat<Scalar> y = weight.value * x;
    y += bias.value;
    return y;
  }

  Mat<Scalar> backward(const Mat<Scalar>& dy, const Cache& cache) {
    weight.grad.noalias() += dy * cache.input.transpose();
    bias.grad += dy;
    return weight.value.transpose() * dy;
  }

  ParameterList<Scalar> parameters() { return {&weight, &bias}; }

  Parameter<Scalar> weight;
  Parameter<Scalar> bias;
};

}  // namespace relightkit::nn
