#include "relightkit/direction_classifier.hpp"

#include "relightkit/dataset.hpp"
#include "relightkit/nn/adam.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace relightkit {

void ClassifierConfig::validate() const {
  if (!(train_fraction > 0 && train_fraction < 1)) throw std::invalid_argument("train_fraction must lie in (0, 1)");
  if (!(validation_fraction >= 0 && validation_fraction < 1))
    throw std::invalid_argument("validation_fraction must lie in [0, 1)");
  if (epochs < 1) throw std::invalid_argument("classifier epochs must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("classifier batch_size must be at least 1");
  if (!(initial_lr > 0)) throw std::invalid_argument("initial_lr must be positive");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw std::invalid_argument("lr_decay must lie in (0, 1]");
  if (patience < 1) throw std::invalid_argument("patience must be at least 1");
  spec.validate();
}

ClassificationReport classification_report(const std::vector<Direction>& predictions,
                                           const std::vector<Direction>& truths) {
  if (predictions.size() != truths.size())
    throw std::invalid_argument("classification_report: " + std::to_string(predictions.size()) +
                                " predictions for " + std::to_string(truths.size()) + " truths");
  if (truths.empty()) throw std::invalid_argument("classification_report: empty input");
  ClassificationReport r;
  int exact = 0;
  int near = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const int d = circular_distance(predictions[i], truths[i]);
    exact += d == 0;
    near += d <= 45;
    ++r.confusion[index_of(truths[i])][index_of(predictions[i])];
  }
  r.count = static_cast<int>(truths.size());
  r.exact_accuracy = static_cast<double>(exact) / r.count;
  r.within_90_accuracy = static_cast<double>(near) / r.count;
  return r;
}

ClassificationReport report_from_confusion(const Confusion& confusion) {
  ClassificationReport r;
  r.confusion = confusion;
  int exact = 0;
  int near = 0;
  for (int t = 0; t < 8; ++t)
    for (int p = 0; p < 8; ++p) {
      const int n = confusion[t][p];
      const int d = circular_distance(direction_from_index(t), direction_from_index(p));
      r.count += n;
      if (d == 0) exact += n;
      if (d <= 45) near += n;
    }
  if (r.count == 0) throw std::invalid_argument("empty confusion matrix");
  r.exact_accuracy = static_cast<double>(exact) / r.count;
  r.within_90_accuracy = static_cast<double>(near) / r.count;
  return r;
}

Prediction prediction_from_logits(const Mat<float>& logits) {
  if (logits.size() != 8) throw std::invalid_argument("expected 8 logits, got " + std::to_string(logits.size()));
  Prediction p;
  double top = -INFINITY;
  for (int i = 0; i < 8; ++i) top = std::max(top, static_cast<double>(logits.data()[i]));
  double sum = 0;
  for (int i = 0; i < 8; ++i) {
    p.probabilities[i] = std::exp(static_cast<double>(logits.data()[i]) - top);
    sum += p.probabilities[i];
  }
  int best = 0;
  for (int i = 0; i < 8; ++i) {
    p.probabilities[i] /= sum;
    if (p.probabilities[i] > p.probabilities[best]) best = i;
  }
  p.direction = direction_from_index(best);
  return p;
}

Prediction predict_direction(const Classifier<float>& classifier, const Image& img) {
  return prediction_from_logits(classifier.forward(normalize<float>(img)));
}

Mat<float> classify_logits(const Classifier<float>& classifier, const std::vector<Image>& images) {
  Mat<float> out(static_cast<Eigen::Index>(images.size()), classifier.spec().num_classes);
  for (std::size_t i = 0; i < images.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = classifier.forward(normalize<float>(images[i])).transpose();
  return out;
}

std::vector<LabeledImage> labeled_images(const std::vector<RawSample>& raw) {
  std::vector<LabeledImage> out;
  out.reserve(raw.size());
  for (const auto& s : raw) out.push_back({s.image, s.meta.source});
  return out;
}

namespace {

struct Example {
  nn::Tensor<float> x;
  int label = 0;
};

std::vector<Example> to_examples(const std::vector<LabeledImage>& samples, const std::vector<std::size_t>& idx) {
  std::vector<Example> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back({normalize<float>(samples[i].image), index_of(samples[i].direction)});
  return out;
}

std::vector<Direction> predict_all(const Classifier<float>& c, const std::vector<Example>& ex) {
  std::vector<Direction> out;
  out.reserve(ex.size());
  for (const auto& e : ex) out.push_back(prediction_from_logits(c.forward(e.x)).direction);
  return out;
}

std::vector<Direction> labels_of(const std::vector<Example>& ex) {
  std::vector<Direction> out;
  out.reserve(ex.size());
  for (const auto& e : ex) out.push_back(direction_from_index(e.label));
  return out;
}

}  // namespace

ClassifierRun train_classifier(const std::vector<LabeledImage>& samples, const ClassifierConfig& cfg,
                               const ClassifierEpochCallback& on_epoch) {
  cfg.validate();
  if (samples.empty()) throw std::invalid_argument("empty classifier dataset");
  if (cfg.spec.num_classes != 8) throw std::invalid_argument("direction classifier needs 8 classes");

  const auto [train_idx, test_idx] = split_indices(samples.size(), cfg.train_fraction, nn::derive_seed(cfg.seed, 20));
  std::array<int, 8> present{};
  for (auto i : train_idx) ++present[index_of(samples[i].direction)];
  for (int c = 0; c < 8; ++c)
    if (present[c] == 0)
      throw std::invalid_argument("class " + std::string(label(direction_from_index(c))) +
                                  " is absent from the training split");
  if (test_idx.empty()) throw std::invalid_argument("classifier test split is empty");

  std::vector<std::size_t> fit_idx = train_idx;
  std::vector<std::size_t> val_idx;
  if (cfg.validation_fraction > 0 && train_idx.size() > 1) {
    const auto [fit_pos, val_pos] =
        split_indices(train_idx.size(), 1.0 - cfg.validation_fraction, nn::derive_seed(cfg.seed, 21));
    fit_idx.clear();
    for (auto p : fit_pos) fit_idx.push_back(train_idx[p]);
    for (auto p : val_pos) val_idx.push_back(train_idx[p]);
  }
  const auto fit = to_examples(samples, fit_idx);
  const auto val = to_examples(samples, val_idx);
  const auto test = to_examples(samples, test_idx);

  ClassifierRun run{Classifier<float>(cfg.spec, nn::derive_seed(cfg.seed, 22)), {}, {}};
  auto& net = run.classifier;
  nn::Adam<float> opt(net.parameters(), {cfg.initial_lr, 0.9, 0.999, 1e-8});
  nn::Rng shuffle_rng(nn::derive_seed(cfg.seed, 23));
  std::vector<std::size_t> order(fit.size());

  double lr = cfg.initial_lr;
  double best = -1;
  int stale = 0;
  Classifier<float>::Trace tr;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    nn::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto inv = 1.0f / static_cast<float>(end - start);
      opt.zero_grad();
      for (auto i = start; i < end; ++i) {
        const auto& e = fit[order[i]];
        const auto p = prediction_from_logits(net.forward(e.x, &tr));
        loss -= std::log(std::max(p.probabilities[e.label], 1e-12));
        Mat<float> d(8, 1);
        for (int c = 0; c < 8; ++c) d(c, 0) = static_cast<float>(p.probabilities[c]) * inv;
        d(e.label, 0) -= inv;
        net.backward(d, tr);
      }
      opt.step();
    }
    ClassifierEpoch rec{epoch, loss / static_cast<double>(fit.size()), 0, lr};
    if (!val.empty()) {
      rec.validation_accuracy = classification_report(predict_all(net, val), labels_of(val)).exact_accuracy;
      if (rec.validation_accuracy > best) {
        best = rec.validation_accuracy;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        lr *= cfg.lr_decay;
        opt.set_learning_rate(lr);
        stale = 0;
      }
    }
    run.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  run.report = classification_report(predict_all(net, test), labels_of(test));
  return run;
}

void write_confusion_csv(const ClassificationReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "truth";
  for (auto d : kAllDirections) out << ',' << label(d);
  out << '\n';
  for (auto t : kAllDirections) {
    out << label(t);
    for (auto p : kAllDirections) out << ',' << report.confusion[index_of(t)][index_of(p)];
    out << '\n';
  }
}

KeyValues summary_block(const ClassificationReport& report) {
  KeyValues kv;
  kv.set("exact_accuracy", format_double(report.exact_accuracy));
  kv.set("within_90_accuracy", format_double(report.within_90_accuracy));
  kv.set("test_count", std::to_string(report.count));
  return kv;
}

void write_classifier_history_csv(const std::vector<ClassifierEpoch>& history, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,train_loss,validation_accuracy,learning_rate\n";
  for (const auto& h : history)
    out << h.epoch << ',' << format_double(h.train_loss) << ',' << format_double(h.validation_accuracy) << ','
        << format_double(h.learning_rate) << '\n';
}

}  // namespace relightkit
