#pragma once

#include "relightkit/dataset.hpp"
#include "relightkit/direction_classifier.hpp"
#include "relightkit/gan_training.hpp"
#include "relightkit/keyvalue.hpp"
#include "relightkit/models.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace relightkit {

struct ConfigKey {
  std::string key;
  std::string default_value;  // empty: required when the command needs it
  std::string help;
};

// Every accepted key with its default.
const std::vector<ConfigKey>& config_keys();

struct RunConfig {
  std::filesystem::path raw_dir;
  std::filesystem::path pairs_dir;
  int temperature_k = kDefaultTemperatureK;
  int image_size = 256;
  double train_fraction = 0.9;
  SplitMode split_mode = SplitMode::by_pair;
  bool include_identity = false;

  GeneratorSpec generator;
  DiscriminatorSpec discriminator;
  TrainConfig train;
  LossWeights weights;
  ClassifierConfig classifier;
  std::uint64_t seed = 0;

  // Throws naming the key when a dataset path is needed but unset.
  const std::filesystem::path& require_raw_dir() const;
  const std::filesystem::path& require_pairs_dir() const;
};

// Builds a config from defaults, then `file` entries, then `overrides` (`key=value`).
// `seed` falls back to `env_seed` (RELIGHTKIT_SEED) when neither source sets it.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides,
                          const std::optional<std::string>& env_seed = std::nullopt);

RunConfig run_config_from(const KeyValues& kv, const std::optional<std::string>& env_seed = std::nullopt);

// Fully resolved key set, including defaults.
KeyValues to_key_values(const RunConfig& cfg);

std::optional<std::string> seed_from_environment();

}  // namespace relightkit
