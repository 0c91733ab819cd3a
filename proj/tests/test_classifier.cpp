#include "oracles.hpp"
#include "relightkit/direction_classifier.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace relightkit;

namespace {

std::vector<Direction> random_directions(nn::Rng& rng, int n) {
  std::vector<Direction> out;
  for (int i = 0; i < n; ++i) out.push_back(direction_from_index(static_cast<int>(nn::uniform_index(rng, 8))));
  return out;
}

ClassifierConfig tiny_config() {
  ClassifierConfig cfg;
  cfg.spec.input_size = 32;
  cfg.spec.channels = {4, 8};
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_SUITE("classifier") {
  TEST_CASE("report on hand-worked lists") {
    using enum Direction;
    const auto r = classification_report({N, NE, S, W, E}, {N, N, N, NW, E});
    CHECK(r.count == 5);
    CHECK(r.exact_accuracy == doctest::Approx(0.4));
    CHECK(r.within_90_accuracy == doctest::Approx(0.8));
    CHECK(r.confusion[0][1] == 1);
    CHECK(r.confusion[0][4] == 1);
    CHECK(r.confusion[7][6] == 1);
    const auto all_right = classification_report({E, E}, {E, E});
    CHECK(all_right.exact_accuracy == 1.0);
    CHECK(all_right.within_90_accuracy == 1.0);
    CHECK_THROWS(classification_report({N}, {N, S}));
    CHECK_THROWS(classification_report({}, {}));
  }

  TEST_CASE("report matches brute force on random lists") {
    nn::Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
      const int n = 1 + static_cast<int>(nn::uniform_index(rng, 40));
      const auto truth = random_directions(rng, n);
      const auto pred = random_directions(rng, n);
      int exact = 0, near = 0;
      for (int i = 0; i < n; ++i) {
        const int d = oracle::circular_distance(azimuth_deg(pred[i]), azimuth_deg(truth[i]));
        exact += d == 0;
        near += d <= 45;
      }
      const auto r = classification_report(pred, truth);
      REQUIRE(r.exact_accuracy == doctest::Approx(static_cast<double>(exact) / n).epsilon(1e-15));
      REQUIRE(r.within_90_accuracy == doctest::Approx(static_cast<double>(near) / n).epsilon(1e-15));
      REQUIRE(r.within_90_accuracy >= r.exact_accuracy);
      int total = 0, diag = 0;
      for (int t = 0; t < 8; ++t)
        for (int p = 0; p < 8; ++p) {
          total += r.confusion[t][p];
          if (t == p) diag += r.confusion[t][p];
        }
      REQUIRE(total == n);
      REQUIRE(diag == exact);
      REQUIRE(report_from_confusion(r.confusion) == r);
    }
  }

  TEST_CASE("uniform logits pick N with equal probabilities") {
    const Mat<float> logits = Mat<float>::Zero(8, 1);
    const auto p = prediction_from_logits(logits);
    CHECK(p.direction == Direction::N);
    for (double v : p.probabilities) CHECK(v == doctest::Approx(0.125).epsilon(1e-12));
  }

  TEST_CASE("dominant logit wins and probabilities sum to one") {
    nn::Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      Mat<float> logits(8, 1);
      for (int i = 0; i < 8; ++i) logits(i, 0) = static_cast<float>(nn::uniform(rng, -3, 3));
      const int k = static_cast<int>(nn::uniform_index(rng, 8));
      logits(k, 0) = 10.0f;
      const auto p = prediction_from_logits(logits);
      CHECK(p.direction == direction_from_index(k));
      double sum = 0;
      for (double v : p.probabilities) {
        CHECK(v > 0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS(prediction_from_logits(Mat<float>::Zero(7, 1)));
  }

  TEST_CASE("ties go to the lowest azimuth") {
    Mat<float> logits = Mat<float>::Zero(8, 1);
    logits(6, 0) = 2.0f;
    logits(3, 0) = 2.0f;
    CHECK(prediction_from_logits(logits).direction == Direction::SE);
  }

  TEST_CASE("a class missing from the training split is an error") {
    const auto raw = generate_synthetic_dataset(4, 32, 1);
    std::vector<LabeledImage> samples;
    for (const auto& s : labeled_images(raw))
      if (s.direction == Direction::N || s.direction == Direction::E) samples.push_back(s);
    CHECK_THROWS_WITH(train_classifier(samples, tiny_config()), doctest::Contains("is absent from the training split"));
    CHECK_THROWS(train_classifier({}, tiny_config()));
  }

  TEST_CASE("bad configs are rejected") {
    auto cfg = tiny_config();
    cfg.train_fraction = 1.0;
    CHECK_THROWS(cfg.validate());
    cfg = tiny_config();
    cfg.lr_decay = 0;
    CHECK_THROWS(cfg.validate());
    cfg = tiny_config();
    cfg.patience = 0;
    CHECK_THROWS(cfg.validate());
  }

  TEST_CASE("tiny training run is deterministic") {
    const auto samples = labeled_images(generate_synthetic_dataset(6, 32, 2));
    std::vector<ClassifierEpoch> seen;
    auto a = train_classifier(samples, tiny_config(), [&](const ClassifierEpoch& e) { seen.push_back(e); });
    auto b = train_classifier(samples, tiny_config());
    CHECK(a.report == b.report);
    REQUIRE(a.history.size() == 2);
    CHECK(seen.size() == 2);
    CHECK(a.history[0].epoch == 1);
    CHECK(a.history[0].learning_rate == doctest::Approx(1e-3));
    for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].train_loss == b.history[i].train_loss);
    const auto pa = a.classifier.parameters(), pb = b.classifier.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
    // 48 images, 80% train
    CHECK(a.report.count == 48 - 38);
  }

  TEST_CASE("batched logits have one row per image") {
    const auto raw = generate_synthetic_dataset(1, 32, 5);
    Classifier<float> c(tiny_config().spec, 1);
    std::vector<Image> images;
    for (const auto& s : raw) images.push_back(s.image);
    const auto logits = classify_logits(c, images);
    CHECK(logits.rows() == 8);
    CHECK(logits.cols() == 8);
    for (int i = 0; i < 8; ++i)
      CHECK(prediction_from_logits(logits.row(i).transpose()).direction ==
            predict_direction(c, images[static_cast<std::size_t>(i)]).direction);
  }

  TEST_CASE("confusion and summary outputs") {
    using enum Direction;
    const auto r = classification_report({N, E, E}, {N, E, W});
    const auto dir = std::filesystem::temp_directory_path() / "relightkit_confusion_test";
    std::filesystem::create_directories(dir);
    write_confusion_csv(r, dir / "c.csv");
    std::ifstream in(dir / "c.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "truth,N,NE,E,SE,S,SW,W,NW");
    CHECK(first == "N,1,0,0,0,0,0,0,0");
    const auto kv = summary_block(r);
    CHECK(kv.require_double("exact_accuracy") == doctest::Approx(2.0 / 3));
    CHECK(kv.require_int("test_count") == 3);
    std::filesystem::remove_all(dir);
  }
}
