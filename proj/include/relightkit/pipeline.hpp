#pragma once

#include "relightkit/direction_classifier.hpp"
#include "relightkit/gan_training.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>

namespace relightkit {

struct ModelEnsemble {
  std::map<Direction, Generator<float>> generators;
  std::optional<Classifier<float>> classifier;
  std::map<Direction, std::filesystem::path> sources;  // checkpoint directory per target
  std::optional<std::filesystem::path> classifier_source;

  bool complete() const { return generators.size() == 8 && classifier.has_value(); }
  std::vector<Direction> missing() const;
};

// Scans `dir` and its immediate subdirectories for checkpoint manifests. Relighting models are
// keyed by the target recorded in their manifest.
ModelEnsemble load_ensemble(const std::filesystem::path& dir);

struct RelightOptions {
  bool identity_shortcut = true;
  nn::Rng* dropout_rng = nullptr;  // used only by generators with stochastic inference on
};

struct RelightResult {
  Image output;
  std::optional<Direction> estimated_source;  // empty without a classifier
  std::array<double, 8> probabilities{};
  bool model_used = false;
};

// Classifies the source light (when a classifier is loaded), then runs the generator for `target`.
// The classifier never selects the generator; it only reports and enables the identity shortcut.
RelightResult relight(const ModelEnsemble& ensemble, const Image& img, Direction target,
                      const RelightOptions& opt = {});

// Runs a generator on an 8-bit image of its native size.
Image apply_generator(const Generator<float>& g, const Image& img, nn::Rng* dropout_rng = nullptr);

}  // namespace relightkit
