#pragma once

#include "relightkit/gan_training.hpp"
#include "relightkit/keyvalue.hpp"
#include "relightkit/models.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace relightkit {

inline constexpr const char* kManifestFile = "manifest.txt";
inline constexpr const char* kParamsFile = "params.bin";

// Little-endian archive of named float32 matrices.
void write_parameter_archive(const std::filesystem::path& path, const nn::ParameterList<float>& params);
std::map<std::string, Mat<float>> read_parameter_archive(const std::filesystem::path& path);
// Copies archive entries into `params` by name; every parameter must be present with a matching shape.
void assign_parameters(const std::map<std::string, Mat<float>>& archive, const nn::ParameterList<float>& params,
                       const std::string& origin);

struct RelightCheckpointInfo {
  int epoch = 0;
  std::uint64_t seed = 0;
  KeyValues config;  // training config echo
};

// Writes `<dir>/params.bin` and `<dir>/manifest.txt`.
void save_relight_checkpoint(const std::filesystem::path& dir, RelightModel& model, const RelightCheckpointInfo& info);

// Reads the architecture from the manifest.
RelightModel load_relight_checkpoint(const std::filesystem::path& dir);
// Refuses when the manifest's generator hash differs from `expected`'s.
RelightModel load_relight_checkpoint(const std::filesystem::path& dir, const GeneratorSpec& expected);

KeyValues read_checkpoint_manifest(const std::filesystem::path& dir);

void save_classifier_checkpoint(const std::filesystem::path& dir, Classifier<float>& classifier,
                                const KeyValues& extra = {});
Classifier<float> load_classifier_checkpoint(const std::filesystem::path& dir);

KeyValues to_key_values(const TrainConfig& cfg, const LossWeights& w);

}  // namespace relightkit
