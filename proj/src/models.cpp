#include "relightkit/models.hpp"

#include "relightkit/nn/im2col.hpp"

#include <bit>
#include <stdexcept>

namespace relightkit {

namespace {

const char* norm_name(Norm n) { return n == Norm::instance ? "instance" : "none"; }

Norm norm_from(const std::string& s) {
  if (s == "instance") return Norm::instance;
  if (s == "none") return Norm::none;
  throw std::invalid_argument("unknown norm '" + s + "'");
}

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::none: return "none";
    case Activation::leaky_relu: return "leaky_relu_0.2";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "none";
}

Activation activation_from(const std::string& s) {
  for (auto a : {Activation::none, Activation::leaky_relu, Activation::relu, Activation::tanh, Activation::sigmoid})
    if (s == activation_name(a)) return a;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<int> parse_ints(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const auto& t : split_list(s)) out.push_back(parse_int_strict(t, what));
  return out;
}

}  // namespace

void ConvLayerSpec::validate() const {
  if (kernel < 1 || stride < 1 || padding < 0 || out_channels < 1)
    throw std::invalid_argument("invalid conv layer: kernel " + std::to_string(kernel) + ", stride " +
                                std::to_string(stride) + ", padding " + std::to_string(padding) + ", channels " +
                                std::to_string(out_channels));
}

int GeneratorSpec::stages() const { return std::countr_zero(static_cast<unsigned>(image_size)); }

std::vector<int> GeneratorSpec::resolved_channels() const {
  if (!encoder_channels.empty()) return encoder_channels;
  std::vector<int> out;
  for (int i = 0; i < stages(); ++i) out.push_back(std::min(64 << std::min(i, 4), 512));
  return out;
}

void GeneratorSpec::validate() const {
  if (image_size < 2 || !std::has_single_bit(static_cast<unsigned>(image_size)))
    throw std::invalid_argument("generator image_size must be a power of two, got " + std::to_string(image_size));
  const auto ch = resolved_channels();
  if (static_cast<int>(ch.size()) != stages())
    throw std::invalid_argument("generator needs " + std::to_string(stages()) + " encoder widths for size " +
                                std::to_string(image_size) + ", got " + std::to_string(ch.size()));
  for (int c : ch)
    if (c < 1) throw std::invalid_argument("encoder widths must be positive");
  if (dropout_decoder_blocks < 0) throw std::invalid_argument("dropout_decoder_blocks must be non-negative");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("dropout_rate must lie in [0, 1)");
}

GeneratorSpec GeneratorSpec::scaled(int image_size, int base, int cap) {
  GeneratorSpec spec;
  spec.image_size = image_size;
  spec.validate();
  for (int i = 0; i < spec.stages(); ++i) spec.encoder_channels.push_back(std::min(base << std::min(i, 20), cap));
  return spec;
}

std::vector<ConvLayerSpec> DiscriminatorSpec::default_layers(int base) {
  return {
      {4, 2, 1, base, Norm::none, Activation::leaky_relu},
      {4, 2, 1, base * 2, Norm::instance, Activation::leaky_relu},
      {4, 2, 1, base * 4, Norm::instance, Activation::leaky_relu},
      {4, 1, 1, base * 8, Norm::instance, Activation::leaky_relu},
      {4, 1, 1, 1, Norm::none, Activation::none},
  };
}

void DiscriminatorSpec::validate() const {
  if (layers.empty()) throw std::invalid_argument("discriminator needs at least one layer");
  if (input_channels < 1) throw std::invalid_argument("discriminator input_channels must be positive");
  for (const auto& l : layers) l.validate();
  if (layers.back().out_channels != 1) throw std::invalid_argument("last discriminator layer must emit 1 channel");
}

void ClassifierSpec::validate() const {
  if (channels.empty()) throw std::invalid_argument("classifier needs at least one conv block");
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("classifier kernel must be odd");
  if (num_classes < 2) throw std::invalid_argument("classifier needs at least two classes");
  const int factor = 1 << channels.size();
  if (input_size < factor || input_size % factor != 0)
    throw std::invalid_argument("classifier input_size " + std::to_string(input_size) + " must be divisible by " +
                                std::to_string(factor));
  for (int c : channels)
    if (c < 1) throw std::invalid_argument("classifier widths must be positive");
}

int receptive_field(const std::vector<ConvLayerSpec>& layers) {
  if (layers.empty()) throw std::invalid_argument("receptive_field needs at least one layer");
  int r = 1;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) r = r * it->stride + (it->kernel - it->stride);
  return r;
}

MapShape discriminator_output_shape(const DiscriminatorSpec& spec, int height, int width) {
  MapShape s{height, width};
  for (const auto& l : spec.layers) {
    s.height = nn::conv_output_size(s.height, l.kernel, l.stride, l.padding);
    s.width = nn::conv_output_size(s.width, l.kernel, l.stride, l.padding);
  }
  return s;
}

KeyValues to_key_values(const GeneratorSpec& spec) {
  KeyValues kv;
  kv.set("image_size", std::to_string(spec.image_size));
  kv.set("encoder_channels", join_ints(spec.resolved_channels()));
  kv.set("dropout_decoder_blocks", std::to_string(spec.dropout_decoder_blocks));
  kv.set("dropout_rate", format_double(spec.dropout_rate));
  return kv;
}

KeyValues to_key_values(const DiscriminatorSpec& spec) {
  KeyValues kv;
  kv.set("input_channels", std::to_string(spec.input_channels));
  kv.set("layer_count", std::to_string(spec.layers.size()));
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    kv.set("layer" + std::to_string(i), std::to_string(l.kernel) + "," + std::to_string(l.stride) + "," +
                                            std::to_string(l.padding) + "," + std::to_string(l.out_channels) + "," +
                                            norm_name(l.norm) + "," + activation_name(l.activation));
  }
  return kv;
}

KeyValues to_key_values(const ClassifierSpec& spec) {
  KeyValues kv;
  kv.set("input_size", std::to_string(spec.input_size));
  kv.set("channels", join_ints(spec.channels));
  kv.set("kernel", std::to_string(spec.kernel));
  kv.set("num_classes", std::to_string(spec.num_classes));
  return kv;
}

GeneratorSpec generator_spec_from(const KeyValues& kv) {
  GeneratorSpec spec;
  spec.image_size = kv.require_int("image_size");
  spec.encoder_channels = parse_ints(kv.require("encoder_channels"), "encoder_channels");
  spec.dropout_decoder_blocks = kv.require_int("dropout_decoder_blocks");
  spec.dropout_rate = kv.require_double("dropout_rate");
  spec.validate();
  return spec;
}

DiscriminatorSpec discriminator_spec_from(const KeyValues& kv) {
  DiscriminatorSpec spec;
  spec.input_channels = kv.require_int("input_channels");
  spec.layers.clear();
  const int n = kv.require_int("layer_count");
  for (int i = 0; i < n; ++i) {
    const auto key = "layer" + std::to_string(i);
    const auto f = split_list(kv.require(key));
    if (f.size() != 6) throw std::invalid_argument(key + ": expected 6 fields");
    spec.layers.push_back({parse_int_strict(f[0], key), parse_int_strict(f[1], key), parse_int_strict(f[2], key),
                           parse_int_strict(f[3], key), norm_from(f[4]), activation_from(f[5])});
  }
  spec.validate();
  return spec;
}

ClassifierSpec classifier_spec_from(const KeyValues& kv) {
  ClassifierSpec spec;
  spec.input_size = kv.require_int("input_size");
  spec.channels = parse_ints(kv.require("channels"), "channels");
  spec.kernel = kv.require_int("kernel");
  spec.num_classes = kv.require_int("num_classes");
  spec.validate();
  return spec;
}

std::string spec_hash(const GeneratorSpec& spec) { return content_hash("generator\n" + to_key_values(spec).to_string()); }
std::string spec_hash(const DiscriminatorSpec& spec) {
  return content_hash("discriminator\n" + to_key_values(spec).to_string());
}
std::string spec_hash(const ClassifierSpec& spec) {
  return content_hash("classifier\n" + to_key_values(spec).to_string());
}

}  // namespace relightkit
