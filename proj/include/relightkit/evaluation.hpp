#pragma once

#include "relightkit/dataset.hpp"
#include "relightkit/gan_training.hpp"
#include "relightkit/pipeline.hpp"

#include <filesystem>
#include <limits>
#include <map>
#include <vector>

namespace relightkit {

// Returned for identical images; compares above every finite value.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

// 10·log10(255² / MSE) over all channels.
double psnr(const Image& a, const Image& b);

struct EvalRow {
  Direction target = Direction::E;
  bool absent = false;      // no test pairs for this target
  double psnr_mean = 0;     // over finite values; kInfinitePsnr when every value was infinite
  double psnr_std = 0;      // population form
  int n = 0;                // finite values used
  int excluded_infinite = 0;
  std::vector<double> values;  // per-image PSNR in test order, infinite ones included
};

struct EvalReport {
  std::vector<EvalRow> rows;  // ordered by azimuth
  const EvalRow* find(Direction d) const;
};

EvalRow summarize_psnr(Direction target, const std::vector<double>& values);

struct EvalSample {
  Image output;
  Image truth;
};

// Core aggregation: one row per key, absent rows for empty lists.
EvalReport evaluate_outputs(const std::map<Direction, std::vector<EvalSample>>& outputs);

// Relights every test input with the identity shortcut off and scores it against the ground truth.
EvalReport evaluate_ensemble(const ModelEnsemble& ensemble,
                             const std::map<Direction, std::vector<TrainingPair>>& test_sets);

// Scores the inputs themselves against the ground truth.
EvalReport evaluate_identity(const std::map<Direction, std::vector<TrainingPair>>& test_sets);

// `target,psnr_mean,psnr_std,n,excluded_infinite`, preceded by one `#` line stating conventions.
void write_eval_csv(const EvalReport& report, const std::filesystem::path& path);
std::string format_eval_table(const EvalReport& report);

struct GridTriple {
  Image input;
  Image output;
  Image truth;
};

// Rows are triples; columns are input, output, ground truth; white gutters between cells.
Image sample_grid(const std::vector<GridTriple>& triples, int gutter = 8);

struct LossPlotInfo {
  int x_min = 0;
  int x_max = 0;
  double y_min = 0;
  double y_max = 0;
  int width = 0;
  int height = 0;
};

// Writes the loss CSV and a PNG line plot of the G (g_gan, g_l1) and D (d_real, d_fake) series.
LossPlotInfo export_loss_curve(const std::vector<LossRecord>& records, const std::filesystem::path& csv_path,
                               const std::filesystem::path& png_path);

}  // namespace relightkit
