#include "relightkit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace relightkit {

namespace {

constexpr char kMagic[4] = {'R', 'L', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "parameter archives assume a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); }

std::uint32_t get_u32(std::istream& in, const std::string& origin) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) throw std::runtime_error("truncated archive " + origin);
  return v;
}

KeyValues prefixed(const std::string& prefix, const KeyValues& kv) {
  KeyValues out;
  for (const auto& [k, v] : kv.entries()) out.set(prefix + k, v);
  return out;
}

void merge_into(KeyValues& dst, const KeyValues& src) {
  for (const auto& [k, v] : src.entries()) dst.set(k, v);
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

void verify_recorded_hash(const KeyValues& manifest, const std::string& key, const std::string& computed,
                          const std::filesystem::path& dir) {
  const auto recorded = manifest.require(key);
  if (recorded != computed)
    throw std::runtime_error("manifest " + (dir / kManifestFile).string() + " is inconsistent: " + key + " " +
                             recorded + " but its architecture block hashes to " + computed);
}

}  // namespace

void write_parameter_archive(const std::filesystem::path& path, const nn::ParameterList<float>& params) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::map<std::string, Mat<float>> read_parameter_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a parameter archive: " + path.string());
  if (const auto v = get_u32(in, path.string()); v != kVersion)
    throw std::runtime_error("unsupported archive version " + std::to_string(v));
  const auto count = get_u32(in, path.string());
  std::map<std::string, Mat<float>> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(get_u32(in, path.string()), '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name.size())))
      throw std::runtime_error("truncated archive " + path.string());
    const auto rows = get_u32(in, path.string());
    const auto cols = get_u32(in, path.string());
    Mat<float> m(rows, cols);
    if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float))))
      throw std::runtime_error("truncated archive " + path.string());
    out.emplace(std::move(name), std::move(m));
  }
  return out;
}

void assign_parameters(const std::map<std::string, Mat<float>>& archive, const nn::ParameterList<float>& params,
                       const std::string& origin) {
  for (auto* p : params) {
    auto it = archive.find(p->name);
    if (it == archive.end()) throw std::runtime_error(origin + ": missing parameter " + p->name);
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols())
      throw std::runtime_error(origin + ": shape mismatch for " + p->name);
    p->value = it->second;
    p->zero_grad();
  }
}

KeyValues to_key_values(const TrainConfig& cfg, const LossWeights& w) {
  KeyValues kv;
  kv.set("epochs", std::to_string(cfg.epochs));
  kv.set("batch_size", std::to_string(cfg.batch_size));
  kv.set("learning_rate", format_double(cfg.learning_rate));
  kv.set("adam_beta1", format_double(cfg.adam_beta1));
  kv.set("adam_beta2", format_double(cfg.adam_beta2));
  kv.set("seed", std::to_string(cfg.seed));
  kv.set("snapshot_epochs", join_ints(cfg.snapshot_epochs));
  kv.set("linear_decay", cfg.linear_decay ? "true" : "false");
  kv.set("lambda_l1", format_double(w.lambda_l1));
  return kv;
}

void save_relight_checkpoint(const std::filesystem::path& dir, RelightModel& model, const RelightCheckpointInfo& info) {
  std::filesystem::create_directories(dir);
  auto params = model.generator.parameters();
  for (auto* p : model.discriminator.parameters()) params.push_back(p);
  write_parameter_archive(dir / kParamsFile, params);

  KeyValues manifest;
  manifest.set("kind", "relight");
  manifest.set("target_dir", std::string(label(model.target)));
  manifest.set("epoch", std::to_string(info.epoch));
  manifest.set("seed", std::to_string(info.seed));
  manifest.set("spec_hash", spec_hash(model.generator.spec()));
  manifest.set("discriminator_spec_hash", spec_hash(model.discriminator.spec()));
  merge_into(manifest, prefixed("generator.", to_key_values(model.generator.spec())));
  merge_into(manifest, prefixed("discriminator.", to_key_values(model.discriminator.spec())));
  merge_into(manifest, prefixed("config.", info.config));
  manifest.write(dir / kManifestFile);
}

KeyValues read_checkpoint_manifest(const std::filesystem::path& dir) { return KeyValues::read(dir / kManifestFile); }

RelightModel load_relight_checkpoint(const std::filesystem::path& dir) {
  const auto manifest = read_checkpoint_manifest(dir);
  if (manifest.require("kind") != "relight")
    throw std::runtime_error(dir.string() + " is not a relighting checkpoint");
  const auto gspec = generator_spec_from(manifest.with_prefix("generator."));
  const auto dspec = discriminator_spec_from(manifest.with_prefix("discriminator."));
  verify_recorded_hash(manifest, "spec_hash", spec_hash(gspec), dir);
  verify_recorded_hash(manifest, "discriminator_spec_hash", spec_hash(dspec), dir);

  RelightModel model{direction_or_throw(manifest.require("target_dir")), Generator<float>(gspec, 0),
                     PatchDiscriminator<float>(dspec, 0)};
  auto params = model.generator.parameters();
  for (auto* p : model.discriminator.parameters()) params.push_back(p);
  assign_parameters(read_parameter_archive(dir / kParamsFile), params, dir.string());
  return model;
}

RelightModel load_relight_checkpoint(const std::filesystem::path& dir, const GeneratorSpec& expected) {
  const auto manifest = read_checkpoint_manifest(dir);
  const auto recorded = manifest.require("spec_hash");
  const auto wanted = spec_hash(expected);
  if (recorded != wanted)
    throw std::runtime_error("spec hash mismatch loading " + dir.string() + ": checkpoint " + recorded +
                             ", requested " + wanted);
  return load_relight_checkpoint(dir);
}

void save_classifier_checkpoint(const std::filesystem::path& dir, Classifier<float>& classifier,
                                const KeyValues& extra) {
  std::filesystem::create_directories(dir);
  write_parameter_archive(dir / kParamsFile, classifier.parameters());
  KeyValues manifest = extra;
  manifest.set("kind", "classifier");
  manifest.set("spec_hash", spec_hash(classifier.spec()));
  merge_into(manifest, prefixed("classifier.", to_key_values(classifier.spec())));
  manifest.write(dir / kManifestFile);
}

Classifier<float> load_classifier_checkpoint(const std::filesystem::path& dir) {
  const auto manifest = read_checkpoint_manifest(dir);
  if (manifest.require("kind") != "classifier")
    throw std::runtime_error(dir.string() + " is not a classifier checkpoint");
  const auto spec = classifier_spec_from(manifest.with_prefix("classifier."));
  verify_recorded_hash(manifest, "spec_hash", spec_hash(spec), dir);
  Classifier<float> c(spec, 0);
  assign_parameters(read_parameter_archive(dir / kParamsFile), c.parameters(), dir.string());
  return c;
}

}  // namespace relightkit
