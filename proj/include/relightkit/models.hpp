#pragma once

#include "relightkit/keyvalue.hpp"
#include "relightkit/nn/layers.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace relightkit {

using nn::Activation;
using nn::Mat;
using nn::Norm;

struct ConvLayerSpec {
  int kernel = 4;
  int stride = 2;
  int padding = 1;
  int out_channels = 64;
  Norm norm = Norm::none;
  Activation activation = Activation::leaky_relu;

  void validate() const;
  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

// U-Net encoder-decoder. Encoder stage i halves the resolution; decoder stages mirror it
// and concatenate the matching encoder output.
struct GeneratorSpec {
  int image_size = 256;
  std::vector<int> encoder_channels;  // empty: min(64·2^i, 512)
  int dropout_decoder_blocks = 3;
  double dropout_rate = 0.5;
  bool stochastic_inference = false;  // runtime switch, not part of the architecture hash

  int stages() const;  // log2(image_size)
  std::vector<int> resolved_channels() const;
  void validate() const;

  // Channel widths base·2^i capped at `cap`.
  static GeneratorSpec scaled(int image_size, int base, int cap);
};

struct DiscriminatorSpec {
  int input_channels = 6;
  std::vector<ConvLayerSpec> layers = default_layers();

  void validate() const;

  // k4/s2 ×3 (64,128,256), k4/s1 512, k4/s1 → 1 logit channel, all padding 1.
  static std::vector<ConvLayerSpec> default_layers(int base = 64);
};

struct ClassifierSpec {
  int input_size = 256;
  std::vector<int> channels = {16, 32, 64, 128};
  int kernel = 3;
  int num_classes = 8;

  void validate() const;
};

// Receptive field of one output unit, grown backward with r <- r·s + (k - s).
int receptive_field(const std::vector<ConvLayerSpec>& layers);

struct MapShape {
  int height = 0;
  int width = 0;
  friend bool operator==(const MapShape&, const MapShape&) = default;
};
MapShape discriminator_output_shape(const DiscriminatorSpec& spec, int height, int width);

// Architecture text blocks (`key = value`) and their content hashes.
KeyValues to_key_values(const GeneratorSpec& spec);
KeyValues to_key_values(const DiscriminatorSpec& spec);
KeyValues to_key_values(const ClassifierSpec& spec);
GeneratorSpec generator_spec_from(const KeyValues& kv);
DiscriminatorSpec discriminator_spec_from(const KeyValues& kv);
ClassifierSpec classifier_spec_from(const KeyValues& kv);
std::string spec_hash(const GeneratorSpec& spec);
std::string spec_hash(const DiscriminatorSpec& spec);
std::string spec_hash(const ClassifierSpec& spec);

// Optional activation of the previous layer, a convolution, optional instance norm,
// optional dropout, and an output activation.
template <typename Scalar, typename ConvT>
struct ConvUnit {
  Activation pre = Activation::none;
  ConvT conv;
  Norm norm = Norm::none;
  bool dropout = false;
  Activation post = Activation::none;

  struct Cache {
    Mat<Scalar> pre_out;
    typename ConvT::Cache conv;
    typename nn::InstanceNorm<Scalar>::Cache norm;
    typename nn::Dropout<Scalar>::Cache drop;
    bool dropped = false;
    Mat<Scalar> post_out;
  };

  nn::Tensor<Scalar> forward(const nn::Tensor<Scalar>& x, Cache& cache, nn::Rng* dropout_rng,
                             double dropout_rate) const {
    nn::Tensor<Scalar> t;
    if (pre != Activation::none) {
      t = x;
      nn::activate(t.data, pre);
      cache.pre_out = t.data;
      t = conv.forward(t, cache.conv);
    } else {
      t = conv.forward(x, cache.conv);
    }
    if (norm == Norm::instance) t = nn::InstanceNorm<Scalar>::forward(t, cache.norm);
    cache.dropped = dropout && dropout_rng != nullptr;
    if (cache.dropped) t = nn::Dropout<Scalar>::forward(t, dropout_rate, *dropout_rng, cache.drop);
    if (post != Activation::none) {
      nn::activate(t.data, post);
      cache.post_out = t.data;
    }
    return t;
  }

  nn::Tensor<Scalar> backward(const nn::Tensor<Scalar>& dy, const Cache& cache, bool input_grad = true) {
    nn::Tensor<Scalar> g = dy;
    if (post != Activation::none) g.data = nn::activation_backward(g.data, cache.post_out, post);
    if (cache.dropped) g = nn::Dropout<Scalar>::backward(g, cache.drop);
    if (norm == Norm::instance) g = nn::InstanceNorm<Scalar>::backward(g, cache.norm);
    g = conv.backward(g, cache.conv, input_grad || pre != Activation::none);
    if (pre != Activation::none) g.data = nn::activation_backward(g.data, cache.pre_out, pre);
    return g;
  }
};

template <typename Scalar>
std::size_t count_parameters(const nn::ParameterList<Scalar>& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += static_cast<std::size_t>(p->value.size());
  return n;
}

template <typename Scalar>
class Generator {
 public:
  using Tensor = nn::Tensor<Scalar>;
  using Encoder = ConvUnit<Scalar, nn::Conv2d<Scalar>>;
  using Decoder = ConvUnit<Scalar, nn::ConvTranspose2d<Scalar>>;

  struct ForwardOptions {
    bool train = false;
    // Dropout runs only when a generator is supplied and (train || stochastic_inference).
    nn::Rng* dropout_rng = nullptr;
    bool zero_bottleneck = false;
    bool zero_skips = false;
  };

  struct Trace {
    std::vector<typename Encoder::Cache> encoder;
    std::vector<typename Decoder::Cache> decoder;
  };

  Generator() = default;
  Generator(GeneratorSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
    spec_.validate();
    const auto ch = spec_.resolved_channels();
    const int n = spec_.stages();
    for (int i = 0; i < n; ++i) {
      Encoder e;
      e.pre = i == 0 ? Activation::none : Activation::leaky_relu;
      e.conv = nn::Conv2d<Scalar>("enc" + std::to_string(i), i == 0 ? 3 : ch[i - 1], ch[i], 4, 2, 1);
      e.norm = (i == 0 || i == n - 1) ? Norm::none : Norm::instance;
      encoders_.push_back(std::move(e));
    }
    // decoders_[k] runs k-th, starting at the bottleneck.
    for (int k = 0; k < n; ++k) {
      const int level = n - 1 - k;
      const int in = level == n - 1 ? ch[n - 1] : 2 * ch[level];
      const int out = level == 0 ? 3 : ch[level - 1];
      Decoder d;
      d.pre = Activation::relu;
      d.conv = nn::ConvTranspose2d<Scalar>("dec" + std::to_string(level), in, out, 4, 2, 1);
      d.norm = level == 0 ? Norm::none : Norm::instance;
      d.dropout = level != 0 && k < spec_.dropout_decoder_blocks;
      d.post = level == 0 ? Activation::tanh : Activation::none;
      decoders_.push_back(std::move(d));
    }
    nn::Rng rng(init_seed);
    for (auto& e : encoders_) e.conv.init_normal(0.02, rng);
    for (auto& d : decoders_) d.conv.init_normal(0.02, rng);
  }

  const GeneratorSpec& spec() const { return spec_; }
  void set_stochastic_inference(bool on) { spec_.stochastic_inference = on; }

  Tensor forward(const Tensor& x, const ForwardOptions& opt = {}, Trace* trace = nullptr) const {
    if (x.channels != 3 || x.height != spec_.image_size || x.width != spec_.image_size)
      throw std::invalid_argument("generator expects 3x" + std::to_string(spec_.image_size) + "x" +
                                  std::to_string(spec_.image_size) + " input, got " + x.shape_string());
    Trace local;
    Trace& tr = trace ? *trace : local;
    const int n = spec_.stages();
    tr.encoder.resize(static_cast<std::size_t>(n));
    tr.decoder.resize(static_cast<std::size_t>(n));
    nn::Rng* rng = (opt.train || spec_.stochastic_inference) ? opt.dropout_rng : nullptr;

    std::vector<Tensor> skips(static_cast<std::size_t>(n));
    const Tensor* h = &x;
    for (int i = 0; i < n; ++i) {
      skips[i] = encoders_[i].forward(*h, tr.encoder[i], nullptr, 0.0);
      h = &skips[i];
    }
    Tensor u = skips[n - 1];
    if (opt.zero_bottleneck) u.data.setZero();
    u = decoders_[0].forward(u, tr.decoder[0], rng, spec_.dropout_rate);
    for (int k = 1; k < n; ++k) {
      const int level = n - 1 - k;
      Tensor skip = skips[level];
      if (opt.zero_skips) skip.data.setZero();
      u = decoders_[k].forward(nn::concat_channels(u, skip), tr.decoder[k], rng, spec_.dropout_rate);
    }
    return u;
  }

  // Accumulates parameter gradients; returns d(loss)/d(input).
  Tensor backward(const Tensor& dy, const Trace& tr) {
    const int n = spec_.stages();
    std::vector<Tensor> skip_grads(static_cast<std::size_t>(n));
    Tensor g = dy;
    for (int k = n - 1; k >= 1; --k) {
      const int level = n - 1 - k;
      Tensor dcat = decoders_[k].backward(g, tr.decoder[k]);
      auto [du, dskip] = nn::split_channels(dcat, dcat.channels - encoders_[level].conv.weight.value.rows());
      skip_grads[level] = std::move(dskip);
      g = std::move(du);
    }
    g = decoders_[0].backward(g, tr.decoder[0]);
    for (int i = n - 1; i >= 0; --i) {
      if (i < n - 1) g.data += skip_grads[i].data;
      g = encoders_[i].backward(g, tr.encoder[i]);
    }
    return g;
  }

  nn::ParameterList<Scalar> parameters() {
    nn::ParameterList<Scalar> out;
    for (auto& e : encoders_)
      for (auto* p : e.conv.parameters()) out.push_back(p);
    for (auto& d : decoders_)
      for (auto* p : d.conv.parameters()) out.push_back(p);
    return out;
  }
  std::size_t parameter_count() { return count_parameters(parameters()); }

  const std::vector<Encoder>& encoders() const { return encoders_; }
  const std::vector<Decoder>& decoders() const { return decoders_; }

 private:
  GeneratorSpec spec_;
  std::vector<Encoder> encoders_;
  std::vector<Decoder> decoders_;
};

template <typename Scalar>
class PatchDiscriminator {
 public:
  using Tensor = nn::Tensor<Scalar>;
  using Unit = ConvUnit<Scalar, nn::Conv2d<Scalar>>;
  using Trace = std::vector<typename Unit::Cache>;

  PatchDiscriminator() = default;
  PatchDiscriminator(DiscriminatorSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
    spec_.validate();
    int in = spec_.input_channels;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const auto& l = spec_.layers[i];
      Unit u;
      u.conv = nn::Conv2d<Scalar>("disc" + std::to_string(i), in, l.out_channels, l.kernel, l.stride, l.padding);
      u.norm = l.norm;
      u.post = l.activation;
      units_.push_back(std::move(u));
      in = l.out_channels;
    }
    nn::Rng rng(init_seed);
    for (auto& u : units_) u.conv.init_normal(0.02, rng);
  }

  const DiscriminatorSpec& spec() const { return spec_; }

  // Patch logits for the channel-concatenation of condition and candidate.
  Tensor forward(const Tensor& condition, const Tensor& candidate, Trace* trace = nullptr) const {
    require_same_shape(condition, candidate, "discriminator");
    Tensor t = nn::concat_channels(condition, candidate);
    if (t.channels != spec_.input_channels)
      throw std::invalid_argument("discriminator expects " + std::to_string(spec_.input_channels) +
                                  " stacked channels, got " + std::to_string(t.channels));
    Trace local;
    Trace& tr = trace ? *trace : local;
    tr.resize(units_.size());
    for (std::size_t i = 0; i < units_.size(); ++i) t = units_[i].forward(t, tr[i], nullptr, 0.0);
    return t;
  }

  // Accumulates parameter gradients; returns the gradient w.r.t. the stacked input when asked.
  Tensor backward(const Tensor& dlogits, const Trace& tr, bool input_grad = true) {
    Tensor g = dlogits;
    for (std::size_t i = units_.size(); i-- > 0;) g = units_[i].backward(g, tr[i], input_grad || i > 0);
    return g;
  }

  nn::ParameterList<Scalar> parameters() {
    nn::ParameterList<Scalar> out;
    for (auto& u : units_)
      for (auto* p : u.conv.parameters()) out.push_back(p);
    return out;
  }
  std::size_t parameter_count() { return count_parameters(parameters()); }

 private:
  DiscriminatorSpec spec_;
  std::vector<Unit> units_;
};

// Mean of the per-patch sigmoids: the scalar D(x, y).
template <typename Scalar>
double discriminator_response(const nn::Tensor<Scalar>& logits) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.data.size(); ++i)
    sum += 1.0 / (1.0 + std::exp(-static_cast<double>(logits.data.data()[i])));
  return sum / static_cast<double>(logits.data.size());
}

// d(response)/d(logit_p) = σ_p(1-σ_p)/P, scaled by `upstream`.
template <typename Scalar>
nn::Tensor<Scalar> discriminator_response_grad(const nn::Tensor<Scalar>& logits, double upstream) {
  nn::Tensor<Scalar> g(logits.channels, logits.height, logits.width);
  const double inv_count = 1.0 / static_cast<double>(logits.data.size());
  for (Eigen::Index i = 0; i < logits.data.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-static_cast<double>(logits.data.data()[i])));
    g.data.data()[i] = static_cast<Scalar>(upstream * s * (1.0 - s) * inv_count);
  }
  return g;
}

template <typename Scalar>
double discriminator_response(const PatchDiscriminator<Scalar>& d, const nn::Tensor<Scalar>& condition,
                              const nn::Tensor<Scalar>& candidate) {
  return discriminator_response(d.forward(condition, candidate));
}

template <typename Scalar>
class Classifier {
 public:
  using Tensor = nn::Tensor<Scalar>;
  using Unit = ConvUnit<Scalar, nn::Conv2d<Scalar>>;

  struct Trace {
    std::vector<typename Unit::Cache> conv;
    std::vector<typename nn::MaxPool2<Scalar>::Cache> pool;
    int pooled_height = 0;
    int pooled_width = 0;
    typename nn::Linear<Scalar>::Cache fc;
  };

  Classifier() = default;
  Classifier(ClassifierSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
    spec_.validate();
    int in = 3;
    nn::Rng rng(init_seed);
    for (std::size_t i = 0; i < spec_.channels.size(); ++i) {
      Unit u;
      u.conv = nn::Conv2d<Scalar>("conv" + std::to_string(i), in, spec_.channels[i], spec_.kernel, 1,
                                  spec_.kernel / 2);
      u.post = Activation::relu;
      u.conv.init_normal(std::sqrt(2.0 / u.conv.fan_in()), rng);
      units_.push_back(std::move(u));
      in = spec_.channels[i];
    }
    fc_ = nn::Linear<Scalar>("fc", in, spec_.num_classes);
    nn::fill_normal(fc_.weight.value, std::sqrt(1.0 / in), rng);
  }

  const ClassifierSpec& spec() const { return spec_; }

  // Class logits as a column vector.
  Mat<Scalar> forward(const Tensor& x, Trace* trace = nullptr) const {
    if (x.channels != 3 || x.height != spec_.input_size || x.width != spec_.input_size)
      throw std::invalid_argument("classifier expects 3x" + std::to_string(spec_.input_size) + "x" +
                                  std::to_string(spec_.input_size) + " input, got " + x.shape_string());
    Trace local;
    Trace& tr = trace ? *trace : local;
    tr.conv.resize(units_.size());
    tr.pool.resize(units_.size());
    Tensor t = x;
    for (std::size_t i = 0; i < units_.size(); ++i) {
      t = units_[i].forward(t, tr.conv[i], nullptr, 0.0);
      t = nn::MaxPool2<Scalar>::forward(t, tr.pool[i]);
    }
    tr.pooled_height = t.height;
    tr.pooled_width = t.width;
    Mat<Scalar> features = t.data.rowwise().mean();
    return fc_.forward(features, tr.fc);
  }

  void backward(const Mat<Scalar>& dlogits, const Trace& tr) {
    Mat<Scalar> dfeat = fc_.backward(dlogits, tr.fc);
    const int spatial = tr.pooled_height * tr.pooled_width;
    Tensor g(static_cast<int>(dfeat.rows()), tr.pooled_height, tr.pooled_width);
    g.data = dfeat.replicate(1, spatial) / static_cast<Scalar>(spatial);
    for (std::size_t i = units_.size(); i-- > 0;) {
      g = nn::MaxPool2<Scalar>::backward(g, tr.pool[i]);
      g = units_[i].backward(g, tr.conv[i], i > 0);
    }
  }

  nn::ParameterList<Scalar> parameters() {
    nn::ParameterList<Scalar> out;
    for (auto& u : units_)
      for (auto* p : u.conv.parameters()) out.push_back(p);
    for (auto* p : fc_.parameters()) out.push_back(p);
    return out;
  }
  std::size_t parameter_count() { return count_parameters(parameters()); }

 private:
  ClassifierSpec spec_;
  std::vector<Unit> units_;
  nn::Linear<Scalar> fc_;
};

}  // namespace relightkit
