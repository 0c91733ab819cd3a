#pragma once

#include "relightkit/dataset.hpp"
#include "relightkit/direction.hpp"
#include "relightkit/image.hpp"
#include "relightkit/keyvalue.hpp"
#include "relightkit/models.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace relightkit {

struct ClassifierConfig {
  double train_fraction = 0.8;
  int epochs = 30;
  double initial_lr = 1e-3;
  double lr_decay = 0.1;            // multiplier applied on a validation plateau
  int patience = 5;                 // epochs without validation improvement before decaying
  double validation_fraction = 0.1; // held out of the training split to drive the schedule
  int batch_size = 16;
  std::uint64_t seed = 0;
  ClassifierSpec spec;

  void validate() const;
};

using Confusion = std::array<std::array<int, 8>, 8>;  // [truth][prediction]

struct ClassificationReport {
  double exact_accuracy = 0;
  double within_90_accuracy = 0;  // circular distance <= 45
  Confusion confusion{};
  int count = 0;

  friend bool operator==(const ClassificationReport&, const ClassificationReport&) = default;
};

ClassificationReport classification_report(const std::vector<Direction>& predictions,
                                           const std::vector<Direction>& truths);
// Recomputes both accuracies from the matrix alone.
ClassificationReport report_from_confusion(const Confusion& confusion);

struct Prediction {
  Direction direction = Direction::N;
  std::array<double, 8> probabilities{};
};

// Softmax over the logits; argmax with ties resolved toward the lowest azimuth.
Prediction prediction_from_logits(const Mat<float>& logits);
Prediction predict_direction(const Classifier<float>& classifier, const Image& img);

// One row of logits per image.
Mat<float> classify_logits(const Classifier<float>& classifier, const std::vector<Image>& images);

struct LabeledImage {
  Image image;
  Direction direction = Direction::N;
};

struct ClassifierEpoch {
  int epoch = 0;
  double train_loss = 0;
  double validation_accuracy = 0;
  double learning_rate = 0;
};

struct ClassifierRun {
  Classifier<float> classifier;
  ClassificationReport report;  // on the held-out test split
  std::vector<ClassifierEpoch> history;
};

using ClassifierEpochCallback = std::function<void(const ClassifierEpoch&)>;

// Cross-entropy training with Adam and plateau step decay.
ClassifierRun train_classifier(const std::vector<LabeledImage>& samples, const ClassifierConfig& cfg,
                               const ClassifierEpochCallback& on_epoch = {});

// Raw samples as labelled images (label = source direction).
std::vector<LabeledImage> labeled_images(const std::vector<RawSample>& raw);

// Confusion matrix CSV: `truth,N,NE,...,NW`, one row per true class.
void write_confusion_csv(const ClassificationReport& report, const std::filesystem::path& path);
KeyValues summary_block(const ClassificationReport& report);

// `epoch,train_loss,validation_accuracy,learning_rate`.
void write_classifier_history_csv(const std::vector<ClassifierEpoch>& history, const std::filesystem::path& path);

}  // namespace relightkit
