#pragma once

#include "relightkit/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace relightkit::nn {

struct AdamOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
class Adam {
 public:
  Adam() = default;
  Adam(ParameterList<Scalar> params, AdamOptions options) : params_(std::move(params)), options_(options) {
    for (auto* p : params_) {
      first_.push_back(Mat<Scalar>::Zero(p->value.rows(), p->value.cols()));
      second_.push_back(Mat<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    ++steps_;
    const double bias1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
    const double bias2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
    const auto b1 = static_cast<Scalar>(options_.beta1);
    const auto b2 = static_cast<Scalar>(options_.beta2);
    const auto step_size = static_cast<Scalar>(options_.learning_rate / bias1);
    const auto root_bias2 = static_cast<Scalar>(std::sqrt(bias2));
    const auto eps = static_cast<Scalar>(options_.epsilon);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const Eigen::Index n = params_[i]->value.size();
      // Chunked so the four streams stay cache resident between the three updates.
      for (Eigen::Index start = 0; start < n; start += kChunk) {
        const Eigen::Index len = std::min(kChunk, n - start);
        auto g = Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>(params_[i]->grad.data() + start, len);
        auto m = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>(first_[i].data() + start, len);
        auto v = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>(second_[i].data() + start, len);
        auto w = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>(params_[i]->value.data() + start, len);
        m = b1 * m + (Scalar(1) - b1) * g;
        v = b2 * v + (Scalar(1) - b2) * g.square();
        w -= step_size * m / (v.sqrt() / root_bias2 + eps);
      }
    }
  }

  void set_learning_rate(double lr) { options_.learning_rate = lr; }
  double learning_rate() const { return options_.learning_rate; }
  long steps() const { return steps_; }

 private:
  static constexpr Eigen::Index kChunk = 2048;

  ParameterList<Scalar> params_;
  AdamOptions options_;
  std::vector<Mat<Scalar>> first_;
  std::vector<Mat<Scalar>> second_;
  long steps_ = 0;
};

}  // namespace relightkit::nn
