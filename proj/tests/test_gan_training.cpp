#include "oracles.hpp"
#include "relightkit/checkpoint.hpp"
#include "relightkit/gan_training.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace relightkit;

namespace {

template <typename S>
nn::Tensor<S> random_tensor(int c, int h, int w, std::uint64_t seed, double lo = -1, double hi = 1) {
  nn::Rng rng(seed);
  nn::Tensor<S> t(c, h, w);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] = static_cast<S>(nn::uniform(rng, lo, hi));
  return t;
}

DiscriminatorSpec tiny_discriminator() {
  DiscriminatorSpec d;
  d.layers = {{4, 2, 1, 8, Norm::none, Activation::leaky_relu},
              {4, 2, 1, 16, Norm::instance, Activation::leaky_relu},
              {4, 1, 1, 1, Norm::none, Activation::none}};
  return d;
}

std::vector<TrainingPair> tiny_pairs(int scenes, Direction target = Direction::E) {
  return build_pairs(generate_synthetic_dataset(scenes, 16, 3), target);
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("relightkit_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("gan_training") {
  TEST_CASE("cgan loss values") {
    CHECK(std::fabs(cgan_loss_value(0.5, 0.5) + 2 * std::log(2.0)) < 1e-12);
    CHECK(cgan_loss_value(0.9, 0.2) == doctest::Approx(std::log(0.9) + std::log(0.8)).epsilon(1e-14));
    CHECK(cgan_loss_value(0.9, 0.2) == doctest::Approx(-0.3285).epsilon(1e-4));
    const double near_perfect = cgan_loss_value(1.0 - 1e-9, 1e-9);
    CHECK(near_perfect < 0);
    CHECK(near_perfect > -1e-6);
    CHECK(std::isfinite(cgan_loss_value(0.0, 1.0)));
    CHECK(cgan_loss_value(0.0, 1.0) == doctest::Approx(2 * std::log(1e-7)));
  }

  TEST_CASE("cgan loss is monotone in both responses") {
    for (double r = 0.05; r < 0.95; r += 0.05) {
      CHECK(cgan_loss_value(r + 0.01, 0.4) > cgan_loss_value(r, 0.4));
      CHECK(cgan_loss_value(0.6, r + 0.01) < cgan_loss_value(0.6, r));
    }
  }

  TEST_CASE("l1 loss examples and scalar oracle") {
    auto y = random_tensor<double>(3, 4, 4, 1);
    CHECK(l1_loss(y, y) == 0.0);
    nn::Tensor<double> ones(3, 2, 2), halves(3, 2, 2);
    ones.data.setConstant(1.0);
    halves.data.setConstant(0.5);
    CHECK(l1_loss(ones, halves) == 0.5);
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto a = random_tensor<double>(3, 4, 4, 2 * s + 10);
      const auto b = random_tensor<double>(3, 4, 4, 2 * s + 11);
      std::vector<double> va(a.data.data(), a.data.data() + a.data.size());
      std::vector<double> vb(b.data.data(), b.data.data() + b.data.size());
      CHECK(std::fabs(l1_loss(a, b) - oracle::l1(va, vb)) < 1e-12);
    }
    CHECK_THROWS(l1_loss(ones, y));
  }

  TEST_CASE("generator objective") {
    CHECK(generator_objective(-std::log(0.5), 0.5, {100}) == doctest::Approx(50.693147).epsilon(1e-7));
    CHECK(generator_objective(0.7, 0.3, {0}) == 0.7);
    CHECK(generator_objective(0, 0, {100}) == 0);
    for (double lambda : {0.0, 1.0, 100.0}) {
      const double a = generator_objective(0.3, 0.1, {lambda});
      const double b = generator_objective(0.3, 0.6, {lambda});
      CHECK((b - a) / 0.5 == doctest::Approx(lambda).epsilon(1e-12));
    }
  }

  TEST_CASE("config cadence") {
    TrainConfig long_run;
    long_run.epochs = 1000;
    CHECK(long_run.checkpoint_epochs() == std::vector<int>{10, 100, 250, 500, 750, 1000});
    TrainConfig desk;
    CHECK(desk.checkpoint_epochs() == std::vector<int>{10, 50});
    desk.epochs = 7;
    CHECK(desk.checkpoint_epochs() == std::vector<int>{7});
    TrainConfig bad;
    bad.epochs = 0;
    CHECK_THROWS(bad.validate());
    bad = TrainConfig{};
    bad.batch_size = 0;
    CHECK_THROWS(bad.validate());
  }

  TEST_CASE("linear decay schedule") {
    TrainConfig c;
    c.epochs = 10;
    c.linear_decay = true;
    CHECK(c.learning_rate_at(5) == c.learning_rate);
    CHECK(c.learning_rate_at(6) < c.learning_rate);
    CHECK(c.learning_rate_at(10) > 0);
    c.linear_decay = false;
    CHECK(c.learning_rate_at(10) == c.learning_rate);
  }

  TEST_CASE("training one pair reduces the L1 term") {
    Generator<float> g(GeneratorSpec::scaled(16, 8, 16), 1);
    PatchDiscriminator<float> d(tiny_discriminator(), 2);
    TrainConfig cfg;
    GanTrainer<float> trainer(g, d, cfg, {100});
    const auto data = to_tensor_pairs<float>(tiny_pairs(1));
    const std::span<const TensorPair<float>> one(&data[0], 1);
    const double first = trainer.train_step(one).g_l1;
    double last = first;
    for (int i = 1; i < 200; ++i) last = trainer.train_step(one).g_l1;
    CHECK(last < first);
    CHECK(last < 0.5 * first);
  }

  TEST_CASE("with lambda 0 the L1 target does not influence the update") {
    const auto pairs = to_tensor_pairs<float>(tiny_pairs(1));
    auto other = pairs[0];
    other.target.data = -other.target.data;
    std::vector<Mat<float>> after[2];
    double reported[2];
    for (int run = 0; run < 2; ++run) {
      Generator<float> g(GeneratorSpec::scaled(16, 8, 16), 1);
      PatchDiscriminator<float> d(tiny_discriminator(), 2);
      GanTrainer<float> trainer(g, d, TrainConfig{}, {0});
      const auto& p = run == 0 ? pairs[0] : other;
      StepLosses s;
      for (int i = 0; i < 3; ++i) s = trainer.train_step(std::span(&p, 1), {.update_discriminator = false});
      reported[run] = s.g_l1;
      for (auto* q : g.parameters()) after[run].push_back(q->value);
    }
    CHECK(reported[0] > 0);
    CHECK(reported[0] != reported[1]);
    REQUIRE(after[0].size() == after[1].size());
    for (std::size_t i = 0; i < after[0].size(); ++i) CHECK(after[0][i] == after[1][i]);
  }

  TEST_CASE("discriminator-only updates reduce its loss") {
    Generator<float> g(GeneratorSpec::scaled(16, 8, 16), 1);
    PatchDiscriminator<float> d(tiny_discriminator(), 2);
    GanTrainer<float> trainer(g, d, TrainConfig{}, {100});
    const auto data = to_tensor_pairs<float>(tiny_pairs(1));
    const std::span<const TensorPair<float>> batch(data.data(), 4);
    const auto first = trainer.train_step(batch, {.update_generator = false});
    StepLosses last;
    for (int i = 1; i < 50; ++i) last = trainer.train_step(batch, {.update_generator = false});
    CHECK(last.d_real + last.d_fake < first.d_real + first.d_fake);
  }

  TEST_CASE("non-finite losses abort naming the component") {
    Generator<float> g(GeneratorSpec::scaled(16, 4, 8), 1);
    PatchDiscriminator<float> d(tiny_discriminator(), 2);
    GanTrainer<float> trainer(g, d, TrainConfig{}, {100});
    auto data = to_tensor_pairs<float>(tiny_pairs(1));
    data[0].target.data.setConstant(std::numeric_limits<float>::quiet_NaN());
    CHECK_THROWS_WITH(trainer.train_step(std::span(&data[0], 1)), doctest::Contains("non-finite loss component"));
  }

  TEST_CASE("analytic generator gradient matches central differences") {
    const auto spec = GeneratorSpec::scaled(16, 4, 4);
    Generator<double> g(spec, 7);
    PatchDiscriminator<double> d(tiny_discriminator(), 8);
    const auto x = random_tensor<double>(3, 16, 16, 1);
    const auto y = random_tensor<double>(3, 16, 16, 2, -0.9, 0.9);
    const LossWeights w{100};
    const auto objective = [&] {
      nn::Rng rng(5);
      return generator_objective_for_pair(g, d, x, y, w, &rng, false);
    };
    auto params = g.parameters();
    for (auto* p : params) p->zero_grad();
    {
      nn::Rng rng(5);
      generator_objective_for_pair(g, d, x, y, w, &rng, true);
    }
    nn::Rng pick(99);
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
      auto* p = params[nn::uniform_index(pick, params.size())];
      const auto i = static_cast<Eigen::Index>(nn::uniform_index(pick, static_cast<std::size_t>(p->value.size())));
      double& v = p->value.data()[i];
      const double saved = v;
      const double h = 1e-5;
      v = saved + h;
      const double up = objective();
      v = saved - h;
      const double down = objective();
      v = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p->grad.data()[i];
      const double rel = std::fabs(numeric - analytic) / std::max({std::fabs(numeric), std::fabs(analytic), 1e-4});
      worst = std::max(worst, rel);
    }
    CHECK(worst <= 1e-3);
  }

  TEST_CASE("training runs are reproducible and checkpoint on cadence") {
    const auto pairs = tiny_pairs(2);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.snapshot_epochs = {2, 10};
    cfg.seed = 4;
    const auto spec = GeneratorSpec::scaled(16, 4, 8);
    const auto dir = scratch("train");
    const auto a = train_relight_model(pairs, Direction::E, spec, tiny_discriminator(), cfg, {}, dir);
    const auto b = train_relight_model(pairs, Direction::E, spec, tiny_discriminator(), cfg, {});
    CHECK(a.losses.size() == 3);
    CHECK(a.losses == b.losses);
    for (int e = 0; e < 3; ++e) CHECK(a.losses[e].epoch == e + 1);
    CHECK(a.checkpoints.entries.size() == 2);
    CHECK(a.checkpoints.entries.contains(2));
    CHECK(a.checkpoints.entries.contains(3));
    CHECK(std::filesystem::exists(dir / "snapshots" / "epoch_0002" / "manifest.txt"));
    CHECK(std::filesystem::exists(dir / "snapshots" / "epoch_0003" / "params.bin"));
    CHECK(std::filesystem::exists(dir / "loss.csv"));
    const auto manifest = read_checkpoint_manifest(dir / "snapshots" / "epoch_0002");
    CHECK(manifest.require("epoch") == "2");
    CHECK(manifest.require("target_dir") == "E");
    CHECK(manifest.require("seed") == "4");
    CHECK(manifest.require("spec_hash") == spec_hash(spec));
    CHECK(manifest.require("config.epochs") == "3");

    cfg.seed = 5;
    const auto c = train_relight_model(pairs, Direction::E, spec, tiny_discriminator(), cfg, {});
    CHECK_FALSE(c.losses == a.losses);
  }

  TEST_CASE("training rejects bad inputs") {
    const auto spec = GeneratorSpec::scaled(16, 4, 8);
    CHECK_THROWS_WITH(train_relight_model({}, Direction::E, spec, tiny_discriminator(), TrainConfig{}, {}),
                      "empty training set");
    CHECK_THROWS(train_relight_model(tiny_pairs(1, Direction::W), Direction::E, spec, tiny_discriminator(),
                                     TrainConfig{}, {}));
  }

  TEST_CASE("checkpoint round trip is bit exact") {
    const auto pairs = tiny_pairs(1);
    TrainConfig cfg;
    cfg.epochs = 1;
    const auto spec = GeneratorSpec::scaled(16, 4, 8);
    const auto dir = scratch("ckpt");
    auto run = train_relight_model(pairs, Direction::E, spec, tiny_discriminator(), cfg, {}, dir);
    const auto loaded = load_relight_checkpoint(dir, spec);
    CHECK(loaded.target == Direction::E);
    const auto x = normalize<float>(pairs[0].input);
    CHECK(loaded.generator.forward(x).data == run.model.generator.forward(x).data);
    const auto y = normalize<float>(pairs[0].target);
    CHECK(loaded.discriminator.forward(x, y).data == run.model.discriminator.forward(x, y).data);
  }

  TEST_CASE("loading into a different architecture is refused with both hashes") {
    const auto dir = scratch("ckpt_mismatch");
    RelightModel m{Direction::E, Generator<float>(GeneratorSpec::scaled(256, 2, 4), 1),
                   PatchDiscriminator<float>(tiny_discriminator(), 1)};
    save_relight_checkpoint(dir, m, {1, 0, {}});
    const auto want = GeneratorSpec::scaled(64, 2, 4);
    try {
      load_relight_checkpoint(dir, want);
      FAIL("expected a hash mismatch");
    } catch (const std::exception& e) {
      const std::string msg = e.what();
      CHECK(msg.find(spec_hash(m.generator.spec())) != std::string::npos);
      CHECK(msg.find(spec_hash(want)) != std::string::npos);
    }
  }

  TEST_CASE("tampered manifests are detected") {
    const auto dir = scratch("ckpt_tamper");
    RelightModel m{Direction::E, Generator<float>(GeneratorSpec::scaled(16, 2, 4), 1),
                   PatchDiscriminator<float>(tiny_discriminator(), 1)};
    save_relight_checkpoint(dir, m, {1, 0, {}});
    auto manifest = read_checkpoint_manifest(dir);
    manifest.set("generator.image_size", "32");
    manifest.write(dir / kManifestFile);
    CHECK_THROWS(load_relight_checkpoint(dir));
  }

  TEST_CASE("loss CSV round trip") {
    std::vector<LossRecord> recs;
    nn::Rng rng(3);
    for (int e = 1; e <= 50; ++e)
      recs.push_back({e, nn::uniform(rng, 0, 5), nn::uniform(rng, 0, 1), nn::uniform(rng, 0, 1), 1.0 / 3.0 * e});
    const auto path = scratch("loss") / "loss.csv";
    write_loss_csv(recs, path);
    CHECK(read_loss_csv(path) == recs);
  }
}
