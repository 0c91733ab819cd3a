#include "relightkit/checkpoint.hpp"
#include "relightkit/config.hpp"
#include "relightkit/evaluation.hpp"
#include "relightkit/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace fs = std::filesystem;
using namespace relightkit;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string seed;

  RunConfig load() const {
    auto sets = overrides;
    if (!seed.empty()) sets.push_back("seed=" + seed);
    return load_run_config(config.empty() ? std::nullopt : std::optional<fs::path>(config), sets,
                           seed_from_environment());
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value configuration file");
  cmd->add_option("--set", c.overrides, "override a config key (key=value), repeatable");
  cmd->add_option("--seed", c.seed, "global seed; overrides the config and RELIGHTKIT_SEED");
}

Direction direction_arg(const std::string& token) {
  if (auto d = parse_direction(token)) return *d;
  throw UsageError("unknown direction token " + token + "; valid directions: " + valid_direction_list());
}

std::vector<Direction> targets_arg(const std::string& token) {
  if (token == "all") return {kAllDirections.begin(), kAllDirections.end()};
  std::vector<Direction> out;
  for (const auto& t : split_list(token)) out.push_back(direction_arg(trim(t)));
  return out;
}

void print_losses(const LossRecord& r) {
  std::printf("epoch %d g_gan %.5f g_l1 %.5f d_real %.5f d_fake %.5f\n", r.epoch, r.g_gan, r.g_l1, r.d_real,
              r.d_fake);
  std::fflush(stdout);
}

std::string config_help() {
  std::string out = "\nConfiguration keys (default):\n";
  for (const auto& k : config_keys())
    out += "  " + k.key + " (" + (k.default_value.empty() ? "required" : k.default_value) + ")  " + k.help + "\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-image relighting toward eight compass light directions"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.footer(config_help());

  // synth-data
  auto* synth = app.add_subcommand("synth-data", "render synthetic heightfield scenes under all eight lights");
  int synth_scenes = 200, synth_size = 64, synth_bumps = 6;
  std::uint64_t synth_seed = 1;
  std::string synth_out = "data";
  synth->add_option("--scenes", synth_scenes, "number of scenes")->check(CLI::PositiveNumber);
  synth->add_option("--size", synth_size, "image side in pixels")->check(CLI::Range(16, 4096));
  synth->add_option("--bumps", synth_bumps, "Gaussian bumps per heightfield")->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_seed, "scene seed");
  synth->add_option("--out", synth_out, "output root; images go to <out>/raw");

  // prepare-data
  auto* prep = app.add_subcommand("prepare-data", "pair raw images per target and split train/test");
  Common prep_common;
  add_common(prep, prep_common);
  std::string prep_raw, prep_out, prep_targets = "all";
  prep->add_option("--raw", prep_raw, "raw image directory (data.raw_dir)");
  prep->add_option("--out", prep_out, "paired output root (data.pairs_dir)");
  prep->add_option("--target", prep_targets, "target direction, comma list or all");

  // train-relight
  auto* train = app.add_subcommand("train-relight", "train the relighting model for one target direction");
  Common train_common;
  add_common(train, train_common);
  std::string train_target, train_pairs, train_out;
  train->add_option("--target", train_target, "target direction")->required();
  train->add_option("--pairs", train_pairs, "paired data root (data.pairs_dir)");
  train->add_option("--out", train_out, "checkpoint directory (default models/<TARGET>)");

  // train-classifier
  auto* tcls = app.add_subcommand("train-classifier", "train the light direction classifier on raw images");
  Common tcls_common;
  add_common(tcls, tcls_common);
  std::string tcls_raw, tcls_out = "models/classifier";
  tcls->add_option("--raw", tcls_raw, "raw image directory (data.raw_dir)");
  tcls->add_option("--out", tcls_out, "checkpoint and report directory");

  // relight
  auto* rel = app.add_subcommand("relight", "relight one image toward a target direction");
  std::string rel_target, rel_input, rel_models = "models", rel_output = "relit.png";
  bool rel_no_shortcut = false, rel_stochastic = false;
  std::uint64_t rel_seed = 0;
  rel->add_option("--target", rel_target, "target direction")->required();
  rel->add_option("--input", rel_input, "input PNG")->required();
  rel->add_option("--models", rel_models, "ensemble directory");
  rel->add_option("--output", rel_output, "output PNG");
  rel->add_flag("--no-shortcut", rel_no_shortcut, "run the model even when the source equals the target");
  rel->add_flag("--stochastic", rel_stochastic, "keep decoder dropout active");
  rel->add_option("--dropout-seed", rel_seed, "seed for stochastic inference");

  // classify
  auto* cls = app.add_subcommand("classify", "estimate the light direction of one image");
  std::string cls_input, cls_models = "models";
  cls->add_option("--input", cls_input, "input PNG")->required();
  cls->add_option("--models", cls_models, "classifier checkpoint or ensemble directory");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "PSNR of every loaded model on its test split");
  Common ev_common;
  add_common(ev, ev_common);
  std::string ev_models = "models", ev_pairs, ev_out = "eval.csv", ev_baseline, ev_grid;
  int ev_grid_rows = 5;
  ev->add_option("--models", ev_models, "ensemble directory");
  ev->add_option("--pairs", ev_pairs, "paired data root (data.pairs_dir)");
  ev->add_option("--out", ev_out, "evaluation CSV");
  ev->add_option("--baseline", ev_baseline, "also write input-vs-truth PSNR to this CSV");
  ev->add_option("--grid", ev_grid, "sample grid PNG (first target evaluated)");
  ev->add_option("--grid-rows", ev_grid_rows, "rows in the sample grid")->check(CLI::PositiveNumber);

  // report
  auto* rep = app.add_subcommand("report", "loss curve plots for every trained model");
  std::string rep_models = "models", rep_out = "report";
  rep->add_option("--models", rep_models, "ensemble directory");
  rep->add_option("--out", rep_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      const auto raw = generate_synthetic_dataset(synth_scenes, synth_size, synth_seed, synth_bumps);
      const fs::path dir = fs::path(synth_out) / "raw";
      fs::create_directories(dir);
      std::vector<ManifestEntry> entries;
      for (const auto& s : raw) {
        const auto name = raw_file_name(s.meta);
        write_png(s.image, dir / name);
        entries.push_back({name, s.meta});
      }
      write_manifest(entries, dir / "manifest.tsv");
      std::printf("wrote %zu images to %s\n", raw.size(), dir.string().c_str());
    } else if (*prep) {
      const auto targets = targets_arg(prep_targets);
      auto cfg = prep_common.load();
      if (!prep_raw.empty()) cfg.raw_dir = prep_raw;
      if (!prep_out.empty()) cfg.pairs_dir = prep_out;
      const auto raw = load_raw_directory(cfg.require_raw_dir(), cfg.temperature_k, cfg.image_size);
      for (auto t : targets) {
        const auto pairs = build_pairs(raw, t, cfg.include_identity);
        const auto split = split_train_test(pairs, cfg.train_fraction, cfg.seed, cfg.split_mode);
        const auto root = cfg.require_pairs_dir() / std::string(label(t));
        write_pair_directory(split.train, root / "train");
        write_pair_directory(split.test, root / "test");
        std::printf("%s: %zu train, %zu test\n", std::string(label(t)).c_str(), split.train.size(),
                    split.test.size());
      }
    } else if (*train) {
      const auto target = direction_arg(train_target);
      auto cfg = train_common.load();
      if (!train_pairs.empty()) cfg.pairs_dir = train_pairs;
      const fs::path out = train_out.empty() ? fs::path("models") / std::string(label(target)) : fs::path(train_out);
      const auto pairs = load_pair_directory(cfg.require_pairs_dir() / std::string(label(target)) / "train");
      const auto run = train_relight_model(pairs, target, cfg.generator, cfg.discriminator, cfg.train, cfg.weights,
                                           out, print_losses);
      export_loss_curve(run.losses, out / "loss.csv", out / "loss.png");
      std::printf("saved %s\n", out.string().c_str());
    } else if (*tcls) {
      auto cfg = tcls_common.load();
      if (!tcls_raw.empty()) cfg.raw_dir = tcls_raw;
      const auto raw = load_raw_directory(cfg.require_raw_dir(), cfg.temperature_k, cfg.image_size);
      auto run = train_classifier(labeled_images(raw), cfg.classifier, [](const ClassifierEpoch& e) {
        std::printf("epoch %d loss %.5f val_acc %.4f lr %g\n", e.epoch, e.train_loss, e.validation_accuracy,
                    e.learning_rate);
        std::fflush(stdout);
      });
      const fs::path out = tcls_out;
      KeyValues echo;
      const auto classifier_keys = to_key_values(cfg).with_prefix("classifier.");
      for (const auto& [k, v] : classifier_keys.entries()) echo.set("config." + k, v);
      echo.set("seed", std::to_string(cfg.seed));
      save_classifier_checkpoint(out, run.classifier, echo);
      write_confusion_csv(run.report, out / "confusion.csv");
      write_classifier_history_csv(run.history, out / "history.csv");
      summary_block(run.report).write(out / "summary.txt");
      std::printf("exact_accuracy=%s\nwithin_90_accuracy=%s\n", format_double(run.report.exact_accuracy).c_str(),
                  format_double(run.report.within_90_accuracy).c_str());
    } else if (*rel) {
      const auto target = direction_arg(rel_target);
      auto ens = load_ensemble(rel_models);
      nn::Rng rng(rel_seed);
      if (rel_stochastic)
        for (auto& [d, g] : ens.generators) g.set_stochastic_inference(true);
      const auto r = relight(ens, read_png(rel_input), target,
                             {.identity_shortcut = !rel_no_shortcut, .dropout_rng = &rng});
      write_png(r.output, rel_output);
      std::printf("estimated_source=%s\n",
                  r.estimated_source ? std::string(label(*r.estimated_source)).c_str() : "unknown");
    } else if (*cls) {
      const fs::path dir = cls_models;
      std::optional<Classifier<float>> c;
      if (fs::exists(dir / kManifestFile))
        c = load_classifier_checkpoint(dir);
      else
        c = load_ensemble(dir).classifier;
      if (!c) throw std::runtime_error("no classifier checkpoint under " + dir.string());
      auto img = read_png(cls_input);
      const int n = c->spec().input_size;
      if (img.width != n || img.height != n) img = resize_area(img, n, n);
      const auto p = predict_direction(*c, img);
      for (auto d : kAllDirections)
        std::printf("%s=%s\n", std::string(label(d)).c_str(), format_double(p.probabilities[index_of(d)]).c_str());
      std::printf("argmax=%s\n", std::string(label(p.direction)).c_str());
    } else if (*ev) {
      auto cfg = ev_common.load();
      if (!ev_pairs.empty()) cfg.pairs_dir = ev_pairs;
      const auto ens = load_ensemble(ev_models);
      std::map<Direction, std::vector<TrainingPair>> tests;
      for (const auto& [d, path] : ens.sources) {
        const auto dir = cfg.require_pairs_dir() / std::string(label(d)) / "test";
        tests[d] = fs::exists(dir) ? load_pair_directory(dir) : std::vector<TrainingPair>{};
      }
      const auto report = evaluate_ensemble(ens, tests);
      write_eval_csv(report, ev_out);
      std::printf("%s", format_eval_table(report).c_str());
      if (!ev_baseline.empty()) write_eval_csv(evaluate_identity(tests), ev_baseline);
      if (!ev_grid.empty()) {
        std::vector<GridTriple> triples;
        for (const auto& [d, pairs] : tests) {
          for (const auto& p : pairs) {
            if (static_cast<int>(triples.size()) == ev_grid_rows) break;
            triples.push_back({p.input, apply_generator(ens.generators.at(d), p.input), p.target});
          }
          if (!triples.empty()) break;
        }
        if (triples.empty()) throw std::runtime_error("no test pairs for the sample grid");
        write_png(sample_grid(triples), ev_grid);
      }
    } else if (*rep) {
      int found = 0;
      std::vector<fs::path> dirs;
      for (const auto& e : fs::directory_iterator(rep_models))
        if (e.is_directory() && fs::exists(e.path() / "loss.csv")) dirs.push_back(e.path());
      std::sort(dirs.begin(), dirs.end());
      for (const auto& d : dirs) {
        const auto records = read_loss_csv(d / "loss.csv");
        if (records.empty()) continue;
        const auto name = d.filename().string();
        const auto info = export_loss_curve(records, fs::path(rep_out) / ("loss_" + name + ".csv"),
                                            fs::path(rep_out) / ("loss_" + name + ".png"));
        const auto& last = records.back();
        std::printf("%s epochs %d..%d final g_gan %.5f g_l1 %.5f d_real %.5f d_fake %.5f\n", name.c_str(), info.x_min,
                    info.x_max, last.g_gan, last.g_l1, last.d_real, last.d_fake);
        ++found;
      }
      if (found == 0) throw std::runtime_error("no loss.csv found under " + rep_models);
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
