#include "relightkit/gan_training.hpp"

#include "relightkit/checkpoint.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace relightkit {

double cgan_loss_value(double d_real_response, double d_fake_response) {
  return std::log(clamp_response(d_real_response)) + std::log(1.0 - clamp_response(d_fake_response));
}

double generator_objective(double adv_term, double l1_term, const LossWeights& w) {
  return adv_term + w.lambda_l1 * l1_term;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1))
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
}

std::vector<int> TrainConfig::checkpoint_epochs() const {
  std::vector<int> out;
  for (int e : snapshot_epochs)
    if (e >= 1 && e <= epochs) out.push_back(e);
  out.push_back(epochs);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double TrainConfig::learning_rate_at(int epoch) const {
  if (!linear_decay) return learning_rate;
  const int constant = epochs / 2;
  if (epoch <= constant) return learning_rate;
  return learning_rate * (1.0 - static_cast<double>(epoch - constant) / static_cast<double>(epochs - constant + 1));
}

TrainingRun train_relight_model(const std::vector<TrainingPair>& pairs, Direction target,
                                const GeneratorSpec& gen_spec, const DiscriminatorSpec& disc_spec,
                                const TrainConfig& cfg, const LossWeights& w,
                                const std::filesystem::path& checkpoint_dir, const EpochCallback& on_epoch) {
  cfg.validate();
  if (w.lambda_l1 < 0) throw std::invalid_argument("lambda_l1 must be non-negative");
  if (pairs.empty()) throw std::invalid_argument("empty training set");
  for (const auto& p : pairs)
    if (p.meta.target != target)
      throw std::invalid_argument("pair " + p.meta.scene_id + " does not target " + std::string(label(target)));

  TrainingRun run{{target, Generator<float>(gen_spec, nn::derive_seed(cfg.seed, 10)),
                   PatchDiscriminator<float>(disc_spec, nn::derive_seed(cfg.seed, 11))},
                  {},
                  {target, {}}};
  const auto data = to_tensor_pairs<float>(pairs);
  GanTrainer<float> trainer(run.model.generator, run.model.discriminator, cfg, w);
  nn::Rng shuffle_rng(nn::derive_seed(cfg.seed, 12));
  const auto snapshots = cfg.checkpoint_epochs();

  std::vector<std::size_t> order(data.size());
  std::vector<TensorPair<float>> batch;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    trainer.set_learning_rate(cfg.learning_rate_at(epoch));
    std::iota(order.begin(), order.end(), std::size_t{0});
    nn::shuffle(order.begin(), order.end(), shuffle_rng);

    LossRecord rec{epoch, 0, 0, 0, 0};
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      batch.clear();
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (auto i = start; i < end; ++i) batch.push_back(data[order[i]]);
      const auto s = trainer.train_step(batch);
      rec.g_gan += s.g_gan;
      rec.g_l1 += s.g_l1;
      rec.d_real += s.d_real;
      rec.d_fake += s.d_fake;
      ++steps;
    }
    const double inv = 1.0 / static_cast<double>(steps);
    rec.g_gan *= inv;
    rec.g_l1 *= inv;
    rec.d_real *= inv;
    rec.d_fake *= inv;
    run.losses.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (std::binary_search(snapshots.begin(), snapshots.end(), epoch)) {
      std::filesystem::path where;
      if (!checkpoint_dir.empty()) {
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%04d", epoch);
        where = checkpoint_dir / "snapshots" / name;
        save_relight_checkpoint(where, run.model, {epoch, cfg.seed, to_key_values(cfg, w)});
      }
      run.checkpoints.entries[epoch] = where;
    }
  }
  if (!checkpoint_dir.empty()) {
    save_relight_checkpoint(checkpoint_dir, run.model, {cfg.epochs, cfg.seed, to_key_values(cfg, w)});
    write_loss_csv(run.losses, checkpoint_dir / "loss.csv");
  }
  return run;
}

void write_loss_csv(const std::vector<LossRecord>& records, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,g_gan,g_l1,d_real,d_fake\n";
  for (const auto& r : records)
    out << r.epoch << ',' << format_double(r.g_gan) << ',' << format_double(r.g_l1) << ','
        << format_double(r.d_real) << ',' << format_double(r.d_fake) << '\n';
}

std::vector<LossRecord> read_loss_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "epoch,g_gan,g_l1,d_real,d_fake")
    throw std::invalid_argument(path.string() + ": unexpected loss CSV header");
  std::vector<LossRecord> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_list(line);
    if (f.size() != 5) throw std::invalid_argument(path.string() + ": expected 5 columns");
    out.push_back({parse_int_strict(f[0], "epoch"), parse_double_strict(f[1], "g_gan"),
                   parse_double_strict(f[2], "g_l1"), parse_double_strict(f[3], "d_real"),
                   parse_double_strict(f[4], "d_fake")});
  }
  return out;
}

}  // namespace relightkit
