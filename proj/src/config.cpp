#include "relightkit/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <stdexcept>

namespace relightkit {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"data.raw_dir", "", "directory of raw <scene>_<temp>_<dir>.png images"},
      {"data.pairs_dir", "", "root of the paired layout <pairs_dir>/<TARGET>/{train,test}"},
      {"data.temperature", "4500", "colour temperature kept from the raw data (K)"},
      {"data.image_size", "256", "square working resolution for pairs, generator and classifier"},
      {"data.train_fraction", "0.9", "fraction of pairs in the relighting train split"},
      {"data.split_mode", "pair", "pair | scene"},
      {"data.include_identity", "false", "also pair each target image with itself"},
      {"generator.base_channels", "64", "first encoder width; doubles per stage"},
      {"generator.max_channels", "512", "encoder width cap"},
      {"generator.dropout_blocks", "3", "decoder blocks with dropout"},
      {"generator.dropout_rate", "0.5", "decoder dropout rate"},
      {"generator.stochastic_inference", "false", "keep dropout active at inference"},
      {"discriminator.base_channels", "64", "first patch discriminator width"},
      {"train.epochs", "50", "relighting epochs"},
      {"train.batch_size", "1", "pairs per step"},
      {"train.learning_rate", "0.0002", "Adam learning rate"},
      {"train.beta1", "0.5", "Adam beta1"},
      {"train.beta2", "0.999", "Adam beta2"},
      {"train.snapshot_epochs", "10,100,250,500,750,1000", "snapshot epochs (final epoch always saved)"},
      {"train.linear_decay", "false", "decay the learning rate linearly over the second half"},
      {"train.lambda_l1", "100", "weight of the L1 term"},
      {"classifier.train_fraction", "0.8", "fraction of images in the classifier train split"},
      {"classifier.epochs", "30", "classifier epochs"},
      {"classifier.learning_rate", "0.001", "initial classifier learning rate"},
      {"classifier.lr_decay", "0.1", "learning rate multiplier on a validation plateau"},
      {"classifier.patience", "5", "epochs without validation improvement before decay"},
      {"classifier.validation_fraction", "0.1", "part of the train split held out for the schedule"},
      {"classifier.batch_size", "16", "images per classifier step"},
      {"classifier.channels", "16,32,64,128", "conv block widths"},
      {"seed", "0", "global seed (RELIGHTKIT_SEED when unset)"},
  };
  return keys;
}

namespace {

std::uint64_t parse_seed(const std::string& text) {
  const auto t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw std::invalid_argument("seed: expected a non-negative integer, got '" + t + "'");
  return v;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (const auto& tok : split_list(text))
    if (!trim(tok).empty()) out.push_back(parse_int_strict(tok, what));
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

const std::filesystem::path& RunConfig::require_raw_dir() const {
  if (raw_dir.empty()) throw std::invalid_argument("config key data.raw_dir is required");
  return raw_dir;
}

const std::filesystem::path& RunConfig::require_pairs_dir() const {
  if (pairs_dir.empty()) throw std::invalid_argument("config key data.pairs_dir is required");
  return pairs_dir;
}

RunConfig run_config_from(const KeyValues& given, const std::optional<std::string>& env_seed) {
  KeyValues kv;
  for (const auto& k : config_keys()) kv.set(k.key, k.default_value);
  for (const auto& [key, value] : given.entries()) {
    bool known = false;
    for (const auto& k : config_keys()) known = known || k.key == key;
    if (!known) throw std::invalid_argument("unknown config key " + key);
    kv.set(key, value);
  }
  if (!given.contains("seed") && env_seed) kv.set("seed", *env_seed);

  const auto s = [&](const char* k) { return kv.require(k); };
  const auto i = [&](const char* k) { return parse_int_strict(s(k), k); };
  const auto d = [&](const char* k) { return parse_double_strict(s(k), k); };
  const auto b = [&](const char* k) { return parse_bool_strict(s(k), k); };

  RunConfig cfg;
  cfg.raw_dir = s("data.raw_dir");
  cfg.pairs_dir = s("data.pairs_dir");
  cfg.temperature_k = i("data.temperature");
  cfg.image_size = i("data.image_size");
  cfg.train_fraction = d("data.train_fraction");
  if (!(cfg.train_fraction > 0 && cfg.train_fraction < 1))
    throw std::invalid_argument("data.train_fraction must lie in (0, 1)");
  const auto mode = s("data.split_mode");
  if (mode == "pair")
    cfg.split_mode = SplitMode::by_pair;
  else if (mode == "scene")
    cfg.split_mode = SplitMode::by_scene;
  else
    throw std::invalid_argument("data.split_mode must be pair or scene, got '" + mode + "'");
  cfg.include_identity = b("data.include_identity");
  cfg.seed = parse_seed(s("seed"));

  const int base = i("generator.base_channels");
  const int cap = i("generator.max_channels");
  if (base < 1 || cap < 1) throw std::invalid_argument("generator channel widths must be positive");
  cfg.generator = GeneratorSpec::scaled(cfg.image_size, base, cap);
  cfg.generator.dropout_decoder_blocks = i("generator.dropout_blocks");
  cfg.generator.dropout_rate = d("generator.dropout_rate");
  cfg.generator.stochastic_inference = b("generator.stochastic_inference");
  cfg.generator.validate();

  const int dbase = i("discriminator.base_channels");
  if (dbase < 1) throw std::invalid_argument("discriminator.base_channels must be positive");
  cfg.discriminator.layers = DiscriminatorSpec::default_layers(dbase);

  cfg.train.epochs = i("train.epochs");
  cfg.train.batch_size = i("train.batch_size");
  cfg.train.learning_rate = d("train.learning_rate");
  cfg.train.adam_beta1 = d("train.beta1");
  cfg.train.adam_beta2 = d("train.beta2");
  cfg.train.snapshot_epochs = parse_int_list(s("train.snapshot_epochs"), "train.snapshot_epochs");
  cfg.train.linear_decay = b("train.linear_decay");
  cfg.train.seed = cfg.seed;
  cfg.train.validate();
  cfg.weights.lambda_l1 = d("train.lambda_l1");
  if (cfg.weights.lambda_l1 < 0) throw std::invalid_argument("train.lambda_l1 must be non-negative");

  cfg.classifier.train_fraction = d("classifier.train_fraction");
  cfg.classifier.epochs = i("classifier.epochs");
  cfg.classifier.initial_lr = d("classifier.learning_rate");
  cfg.classifier.lr_decay = d("classifier.lr_decay");
  cfg.classifier.patience = i("classifier.patience");
  cfg.classifier.validation_fraction = d("classifier.validation_fraction");
  cfg.classifier.batch_size = i("classifier.batch_size");
  cfg.classifier.spec.input_size = cfg.image_size;
  cfg.classifier.spec.channels = parse_int_list(s("classifier.channels"), "classifier.channels");
  cfg.classifier.seed = cfg.seed;
  cfg.classifier.validate();
  return cfg;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides,
                          const std::optional<std::string>& env_seed) {
  KeyValues kv;
  if (file) kv = KeyValues::read(*file);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("override '" + o + "' is not key=value");
    kv.set(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  return run_config_from(kv, env_seed);
}

KeyValues to_key_values(const RunConfig& cfg) {
  KeyValues kv;
  kv.set("data.raw_dir", cfg.raw_dir.string());
  kv.set("data.pairs_dir", cfg.pairs_dir.string());
  kv.set("data.temperature", std::to_string(cfg.temperature_k));
  kv.set("data.image_size", std::to_string(cfg.image_size));
  kv.set("data.train_fraction", format_double(cfg.train_fraction));
  kv.set("data.split_mode", cfg.split_mode == SplitMode::by_pair ? "pair" : "scene");
  kv.set("data.include_identity", cfg.include_identity ? "true" : "false");
  const auto ch = cfg.generator.resolved_channels();
  kv.set("generator.base_channels", std::to_string(ch.front()));
  kv.set("generator.max_channels", std::to_string(*std::max_element(ch.begin(), ch.end())));
  kv.set("generator.dropout_blocks", std::to_string(cfg.generator.dropout_decoder_blocks));
  kv.set("generator.dropout_rate", format_double(cfg.generator.dropout_rate));
  kv.set("generator.stochastic_inference", cfg.generator.stochastic_inference ? "true" : "false");
  kv.set("discriminator.base_channels", std::to_string(cfg.discriminator.layers.front().out_channels));
  kv.set("train.epochs", std::to_string(cfg.train.epochs));
  kv.set("train.batch_size", std::to_string(cfg.train.batch_size));
  kv.set("train.learning_rate", format_double(cfg.train.learning_rate));
  kv.set("train.beta1", format_double(cfg.train.adam_beta1));
  kv.set("train.beta2", format_double(cfg.train.adam_beta2));
  kv.set("train.snapshot_epochs", join(cfg.train.snapshot_epochs));
  kv.set("train.linear_decay", cfg.train.linear_decay ? "true" : "false");
  kv.set("train.lambda_l1", format_double(cfg.weights.lambda_l1));
  kv.set("classifier.train_fraction", format_double(cfg.classifier.train_fraction));
  kv.set("classifier.epochs", std::to_string(cfg.classifier.epochs));
  kv.set("classifier.learning_rate", format_double(cfg.classifier.initial_lr));
  kv.set("classifier.lr_decay", format_double(cfg.classifier.lr_decay));
  kv.set("classifier.patience", std::to_string(cfg.classifier.patience));
  kv.set("classifier.validation_fraction", format_double(cfg.classifier.validation_fraction));
  kv.set("classifier.batch_size", std::to_string(cfg.classifier.batch_size));
  kv.set("classifier.channels", join(cfg.classifier.spec.channels));
  kv.set("seed", std::to_string(cfg.seed));
  return kv;
}

std::optional<std::string> seed_from_environment() {
  if (const char* v = std::getenv("RELIGHTKIT_SEED"); v && *v) return std::string(v);
  return std::nullopt;
}

}  // namespace relightkit
