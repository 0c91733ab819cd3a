#pragma once

#include "relightkit/dataset.hpp"
#include "relightkit/models.hpp"
#include "relightkit/nn/adam.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace relightkit {

struct LossWeights {
  double lambda_l1 = 100.0;
};

struct TrainConfig {
  int epochs = 50;
  int batch_size = 1;
  double learning_rate = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  std::uint64_t seed = 0;
  std::vector<int> snapshot_epochs = {10, 100, 250, 500, 750, 1000};
  bool linear_decay = false;  // constant for the first half, then linearly to zero

  void validate() const;
  // Configured snapshots within [1, epochs] plus the final epoch, ascending.
  std::vector<int> checkpoint_epochs() const;
  double learning_rate_at(int epoch) const;
};

struct LossRecord {
  int epoch = 0;
  double g_gan = 0;
  double g_l1 = 0;
  double d_real = 0;
  double d_fake = 0;
  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

inline constexpr double kResponseClamp = 1e-7;

inline double clamp_response(double r) { return std::clamp(r, kResponseClamp, 1.0 - kResponseClamp); }

// Sample estimate of the conditional GAN value: log D(x,y) + log(1 - D(x,G(x,z))).
double cgan_loss_value(double d_real_response, double d_fake_response);

// adv + λ·l1, where adv is the non-saturating term -log D(x, G(x,z)).
double generator_objective(double adv_term, double l1_term, const LossWeights& w);

// Mean absolute difference over all elements.
template <typename Scalar>
double l1_loss(const nn::Tensor<Scalar>& y, const nn::Tensor<Scalar>& y_hat) {
  nn::require_same_shape(y, y_hat, "l1_loss");
  return (y.data - y_hat.data).template cast<double>().cwiseAbs().mean();
}

template <typename Scalar>
struct TensorPair {
  nn::Tensor<Scalar> input;
  nn::Tensor<Scalar> target;
};

template <typename Scalar>
std::vector<TensorPair<Scalar>> to_tensor_pairs(const std::vector<TrainingPair>& pairs) {
  std::vector<TensorPair<Scalar>> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({normalize<Scalar>(p.input), normalize<Scalar>(p.target)});
  return out;
}

struct StepLosses {
  double g_gan = 0;
  double g_l1 = 0;
  double d_real = 0;
  double d_fake = 0;
};

struct StepOptions {
  bool update_discriminator = true;
  bool update_generator = true;
};

// Objective for one pair with the discriminator held fixed. When `backprop` is set, generator
// gradients are accumulated scaled by `weight` (the discriminator's gradients are touched too).
template <typename Scalar>
double generator_objective_for_pair(Generator<Scalar>& g, PatchDiscriminator<Scalar>& d,
                                    const nn::Tensor<Scalar>& x, const nn::Tensor<Scalar>& y,
                                    const LossWeights& w, nn::Rng* dropout_rng, bool backprop,
                                    double weight = 1.0, double* adv_out = nullptr, double* l1_out = nullptr) {
  typename Generator<Scalar>::Trace gtrace;
  const auto fake = g.forward(x, {.train = true, .dropout_rng = dropout_rng}, &gtrace);
  typename PatchDiscriminator<Scalar>::Trace dtrace;
  const auto logits = d.forward(x, fake, &dtrace);
  const double r = discriminator_response(logits);
  const double adv = -std::log(clamp_response(r));
  const double l1 = l1_loss(y, fake);
  if (adv_out) *adv_out = adv;
  if (l1_out) *l1_out = l1;
  if (backprop) {
    const bool inside = r > kResponseClamp && r < 1.0 - kResponseClamp;
    auto dstack = d.backward(discriminator_response_grad(logits, inside ? -weight / r : 0.0), dtrace, true);
    auto dfake = nn::split_channels(dstack, x.channels).second;
    const auto scale = static_cast<Scalar>(weight * w.lambda_l1 / static_cast<double>(fake.size()));
    dfake.data += (fake.data - y.data).unaryExpr([scale](Scalar v) {
      return v > Scalar(0) ? scale : (v < Scalar(0) ? -scale : Scalar(0));
    });
    g.backward(dfake, gtrace);
  }
  return generator_objective(adv, l1, w);
}

// Alternating optimisation: one discriminator update on real (x,y) vs detached fake (x,G(x)),
// then one generator update on the combined objective. The discriminator loss is halved.
template <typename Scalar>
class GanTrainer {
 public:
  GanTrainer(Generator<Scalar>& g, PatchDiscriminator<Scalar>& d, const TrainConfig& cfg, LossWeights w)
      : g_(g),
        d_(d),
        weights_(w),
        g_opt_(g.parameters(), {cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2}),
        d_opt_(d.parameters(), {cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2}),
        dropout_rng_(nn::derive_seed(cfg.seed, 13)) {}

  void set_learning_rate(double lr) {
    g_opt_.set_learning_rate(lr);
    d_opt_.set_learning_rate(lr);
  }

  StepLosses train_step(std::span<const TensorPair<Scalar>> batch, const StepOptions& opt = {}) {
    if (batch.empty()) throw std::invalid_argument("train_step needs a non-empty batch");
    const auto n = batch.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<typename Generator<Scalar>::Trace> gtraces(n);
    std::vector<nn::Tensor<Scalar>> fakes(n);
    for (std::size_t i = 0; i < n; ++i)
      fakes[i] = g_.forward(batch[i].input, {.train = true, .dropout_rng = &dropout_rng_}, &gtraces[i]);

    StepLosses out;
    d_opt_.zero_grad();
    for (std::size_t i = 0; i < n; ++i) {
      typename PatchDiscriminator<Scalar>::Trace tr;
      auto logits = d_.forward(batch[i].input, batch[i].target, &tr);
      double r = discriminator_response(logits);
      out.d_real += -std::log(clamp_response(r)) * inv_n;
      if (opt.update_discriminator) {
        const double up = interior(r) ? -0.5 * inv_n / r : 0.0;
        d_.backward(discriminator_response_grad(logits, up), tr, false);
      }
      logits = d_.forward(batch[i].input, fakes[i], &tr);
      r = discriminator_response(logits);
      out.d_fake += -std::log(1.0 - clamp_response(r)) * inv_n;
      if (opt.update_discriminator) {
        const double up = interior(r) ? 0.5 * inv_n / (1.0 - r) : 0.0;
        d_.backward(discriminator_response_grad(logits, up), tr, false);
      }
    }
    if (opt.update_discriminator) d_opt_.step();

    g_opt_.zero_grad();
    for (std::size_t i = 0; i < n; ++i) {
      typename PatchDiscriminator<Scalar>::Trace tr;
      const auto logits = d_.forward(batch[i].input, fakes[i], &tr);
      const double r = discriminator_response(logits);
      const double l1 = l1_loss(batch[i].target, fakes[i]);
      out.g_gan += -std::log(clamp_response(r)) * inv_n;
      out.g_l1 += l1 * inv_n;
      if (!opt.update_generator) continue;
      auto dstack = d_.backward(discriminator_response_grad(logits, interior(r) ? -inv_n / r : 0.0), tr, true);
      auto dfake = nn::split_channels(dstack, batch[i].input.channels).second;
      const auto scale = static_cast<Scalar>(inv_n * weights_.lambda_l1 / static_cast<double>(fakes[i].size()));
      dfake.data += (fakes[i].data - batch[i].target.data).unaryExpr([scale](Scalar v) {
        return v > Scalar(0) ? scale : (v < Scalar(0) ? -scale : Scalar(0));
      });
      g_.backward(dfake, gtraces[i]);
    }
    if (opt.update_generator) g_opt_.step();

    check_finite(out.g_gan, "g_gan");
    check_finite(out.g_l1, "g_l1");
    check_finite(out.d_real, "d_real");
    check_finite(out.d_fake, "d_fake");
    return out;
  }

 private:
  static bool interior(double r) { return r > kResponseClamp && r < 1.0 - kResponseClamp; }
  static void check_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw std::runtime_error(std::string("non-finite loss component ") + name);
  }

  Generator<Scalar>& g_;
  PatchDiscriminator<Scalar>& d_;
  LossWeights weights_;
  nn::Adam<Scalar> g_opt_;
  nn::Adam<Scalar> d_opt_;
  nn::Rng dropout_rng_;
};

struct RelightModel {
  Direction target = Direction::E;
  Generator<float> generator;
  PatchDiscriminator<float> discriminator;
};

struct CheckpointSet {
  Direction target_dir = Direction::E;
  std::map<int, std::filesystem::path> entries;  // epoch -> snapshot directory (empty when not persisted)
};

struct TrainingRun {
  RelightModel model;
  std::vector<LossRecord> losses;
  CheckpointSet checkpoints;
};

using EpochCallback = std::function<void(const LossRecord&)>;

// Trains one target direction. With a non-empty `checkpoint_dir`, snapshots are written to
// `<checkpoint_dir>/epoch_NNNN/` and the final model to `<checkpoint_dir>/`.
TrainingRun train_relight_model(const std::vector<TrainingPair>& pairs, Direction target,
                                const GeneratorSpec& gen_spec, const DiscriminatorSpec& disc_spec,
                                const TrainConfig& cfg, const LossWeights& w,
                                const std::filesystem::path& checkpoint_dir = {}, const EpochCallback& on_epoch = {});

// `epoch,g_gan,g_l1,d_real,d_fake`, one row per epoch.
void write_loss_csv(const std::vector<LossRecord>& records, const std::filesystem::path& path);
std::vector<LossRecord> read_loss_csv(const std::filesystem::path& path);

}  // namespace relightkit
