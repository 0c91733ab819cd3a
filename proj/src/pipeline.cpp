#include "relightkit/pipeline.hpp"

#include "relightkit/checkpoint.hpp"

#include <algorithm>
#include <stdexcept>

namespace relightkit {

std::vector<Direction> ModelEnsemble::missing() const {
  std::vector<Direction> out;
  for (auto d : kAllDirections)
    if (!generators.contains(d)) out.push_back(d);
  return out;
}

ModelEnsemble load_ensemble(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> candidates;
  if (std::filesystem::exists(dir / kManifestFile)) candidates.push_back(dir);
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_directory() && std::filesystem::exists(entry.path() / kManifestFile))
      candidates.push_back(entry.path());
  std::sort(candidates.begin(), candidates.end());

  ModelEnsemble ens;
  for (const auto& path : candidates) {
    const auto kind = read_checkpoint_manifest(path).require("kind");
    if (kind == "relight") {
      auto model = load_relight_checkpoint(path);
      if (auto it = ens.sources.find(model.target); it != ens.sources.end())
        throw std::runtime_error("two checkpoints target " + std::string(label(model.target)) + ": " +
                                 it->second.string() + " and " + path.string());
      ens.sources[model.target] = path;
      ens.generators.emplace(model.target, std::move(model.generator));
    } else if (kind == "classifier") {
      if (ens.classifier_source)
        throw std::runtime_error("two classifier checkpoints: " + ens.classifier_source->string() + " and " +
                                 path.string());
      ens.classifier = load_classifier_checkpoint(path);
      ens.classifier_source = path;
    } else {
      throw std::runtime_error(path.string() + ": unknown checkpoint kind " + kind);
    }
  }
  if (ens.generators.empty() && !ens.classifier) throw std::runtime_error("no checkpoints found under " + dir.string());
  return ens;
}

Image apply_generator(const Generator<float>& g, const Image& img, nn::Rng* dropout_rng) {
  const int n = g.spec().image_size;
  if (img.width != n || img.height != n)
    throw std::invalid_argument("image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                                ", model expects " + std::to_string(n) + "x" + std::to_string(n));
  return denormalize(g.forward(normalize<float>(img), {.train = false, .dropout_rng = dropout_rng}));
}

RelightResult relight(const ModelEnsemble& ensemble, const Image& img, Direction target, const RelightOptions& opt) {
  const auto it = ensemble.generators.find(target);
  if (it == ensemble.generators.end()) throw std::runtime_error("model unavailable: " + std::string(label(target)));

  RelightResult out;
  if (ensemble.classifier) {
    const int n = ensemble.classifier->spec().input_size;
    const Image probe = img.width == n && img.height == n ? img : resize_area(img, n, n);
    const auto p = predict_direction(*ensemble.classifier, probe);
    out.estimated_source = p.direction;
    out.probabilities = p.probabilities;
  }
  if (opt.identity_shortcut && out.estimated_source == target) {
    out.output = img;
    return out;
  }
  out.output = apply_generator(it->second, img, opt.dropout_rng);
  out.model_used = true;
  return out;
}

}  // namespace relightkit
