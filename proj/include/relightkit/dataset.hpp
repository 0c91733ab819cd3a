#pragma once

#include "relightkit/direction.hpp"
#include "relightkit/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace relightkit {

inline constexpr int kDefaultTemperatureK = 4500;
inline constexpr std::array<int, 5> kValidTemperaturesK = {2500, 3500, 4500, 5500, 6500};

struct SampleMeta {
  std::string scene_id;
  int temperature_k = kDefaultTemperatureK;
  Direction source = Direction::N;
  std::optional<Direction> target;  // set only for paired samples
  int index = 0;

  bool is_paired() const { return target.has_value(); }
  friend bool operator==(const SampleMeta&, const SampleMeta&) = default;
};

struct RawSample {
  SampleMeta meta;
  Image image;
};

struct TrainingPair {
  Image input;   // x: lit from meta.source
  Image target;  // y: same scene lit from *meta.target
  SampleMeta meta;
};

// Accepts `<scene>_<temp>_<dir>[.png]` and `<scene>_<temp>_<src>_<tgt>_<idx>[.png]`.
// The paired form may omit the temperature, which then defaults to 4500 K.
// Scene ids may themselves contain underscores; tokens are consumed from the right.
SampleMeta parse_sample_name(std::string_view filename);

std::string raw_file_name(const SampleMeta& meta);
std::string paired_file_name(const SampleMeta& meta);

// One pair per (scene, source != target), plus the identity pair when requested,
// ordered by (scene_id, source azimuth).
std::vector<TrainingPair> build_pairs(const std::vector<RawSample>& raw, Direction target,
                                      bool include_identity = false);

enum class SplitMode { by_pair, by_scene };

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> test;
};

// Seeded partition of [0, n) into round(fraction*n) train indices and the rest;
// both lists are returned ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                            std::uint64_t seed);

Split<TrainingPair> split_train_test(const std::vector<TrainingPair>& pairs, double train_fraction,
                                     std::uint64_t seed, SplitMode mode = SplitMode::by_pair);

// Side-by-side AB layout: input on the left, target on the right.
Image encode_pair_image(const TrainingPair& pair);
TrainingPair decode_pair_image(const Image& combined, SampleMeta meta = {});

struct ManifestEntry {
  std::string path;
  SampleMeta meta;
};

// Tab-separated `path scene temp src tgt`, `-` for a missing target.
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& file);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& file);

// Loads `<dir>/*.png` raw samples (or the entries of `<dir>/manifest.tsv` when present),
// keeping only `temperature_k` and resizing to `size`×`size`.
std::vector<RawSample> load_raw_directory(const std::filesystem::path& dir, int temperature_k, int size);

// Loads paired PNGs from one split directory, decoding the AB layout.
std::vector<TrainingPair> load_pair_directory(const std::filesystem::path& dir);

// Writes pairs as `<dir>/<paired_file_name>`.
void write_pair_directory(const std::vector<TrainingPair>& pairs, const std::filesystem::path& dir);

struct SyntheticSceneSpec {
  std::uint64_t seed = 1;
  int size = 64;
  int bumps = 6;
};

inline constexpr double kLightElevationDeg = 45.0;

// Lambertian heightfield with ray-marched hard shadows, lit from `light` at 45° elevation.
// Geometry and albedo depend only on the seed.
Image generate_synthetic_scene(const SyntheticSceneSpec& spec, Direction light);

// `scenes` scenes × 8 light directions at 4500 K, scene ids `synth_<i>`.
std::vector<RawSample> generate_synthetic_dataset(int scenes, int size, std::uint64_t seed, int bumps = 6);

}  // namespace relightkit
