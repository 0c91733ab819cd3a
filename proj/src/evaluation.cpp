#include "relightkit/evaluation.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace relightkit {

double psnr(const Image& a, const Image& b) {
  if (!a.same_size(b))
    throw std::invalid_argument("psnr: image sizes differ (" + std::to_string(a.width) + "x" +
                                std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                std::to_string(b.height) + ")");
  if (a.empty()) throw std::invalid_argument("psnr: empty images");
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const int d = static_cast<int>(a.pixels[i]) - static_cast<int>(b.pixels[i]);
    sum += static_cast<std::uint64_t>(d * d);
  }
  if (sum == 0) return kInfinitePsnr;
  const double mse = static_cast<double>(sum) / static_cast<double>(a.pixels.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

const EvalRow* EvalReport::find(Direction d) const {
  for (const auto& r : rows)
    if (r.target == d) return &r;
  return nullptr;
}

EvalRow summarize_psnr(Direction target, const std::vector<double>& values) {
  EvalRow row;
  row.target = target;
  row.values = values;
  if (values.empty()) {
    row.absent = true;
    return row;
  }
  double sum = 0;
  for (double v : values) {
    if (std::isinf(v)) {
      ++row.excluded_infinite;
      continue;
    }
    sum += v;
    ++row.n;
  }
  if (row.n == 0) {
    row.psnr_mean = kInfinitePsnr;
    return row;
  }
  row.psnr_mean = sum / row.n;
  double sq = 0;
  for (double v : values)
    if (!std::isinf(v)) sq += (v - row.psnr_mean) * (v - row.psnr_mean);
  row.psnr_std = std::sqrt(sq / row.n);
  return row;
}

EvalReport evaluate_outputs(const std::map<Direction, std::vector<EvalSample>>& outputs) {
  EvalReport report;
  for (const auto& [target, samples] : outputs) {
    std::vector<double> values;
    values.reserve(samples.size());
    for (const auto& s : samples) values.push_back(psnr(s.output, s.truth));
    report.rows.push_back(summarize_psnr(target, values));
  }
  return report;
}

namespace {

void check_targets(Direction key, const std::vector<TrainingPair>& pairs) {
  for (const auto& p : pairs)
    if (p.meta.target != key)
      throw std::invalid_argument("test pair " + p.meta.scene_id + " is not a " + std::string(label(key)) + " pair");
}

}  // namespace

EvalReport evaluate_ensemble(const ModelEnsemble& ensemble,
                             const std::map<Direction, std::vector<TrainingPair>>& test_sets) {
  std::map<Direction, std::vector<EvalSample>> outputs;
  for (const auto& [target, pairs] : test_sets) {
    check_targets(target, pairs);
    auto& dst = outputs[target];
    for (const auto& p : pairs) {
      auto r = relight(ensemble, p.input, target, {.identity_shortcut = false});
      dst.push_back({std::move(r.output), p.target});
    }
  }
  return evaluate_outputs(outputs);
}

EvalReport evaluate_identity(const std::map<Direction, std::vector<TrainingPair>>& test_sets) {
  std::map<Direction, std::vector<EvalSample>> outputs;
  for (const auto& [target, pairs] : test_sets) {
    check_targets(target, pairs);
    auto& dst = outputs[target];
    for (const auto& p : pairs) dst.push_back({p.input, p.target});
  }
  return evaluate_outputs(outputs);
}

namespace {

std::string format_db(double v) { return std::isinf(v) ? "inf" : format_double(v); }

}  // namespace

void write_eval_csv(const EvalReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# psnr over all source directions per target; std is the population form (divisor n); "
         "identical images are excluded and counted in excluded_infinite\n";
  out << "target,psnr_mean,psnr_std,n,excluded_infinite\n";
  for (const auto& r : report.rows) {
    out << label(r.target) << ',';
    if (r.absent)
      out << "absent,absent,0,0\n";
    else
      out << format_db(r.psnr_mean) << ',' << format_db(r.psnr_std) << ',' << r.n << ',' << r.excluded_infinite
          << '\n';
  }
}

std::string format_eval_table(const EvalReport& report) {
  std::ostringstream out;
  out << "target  psnr_mean  psnr_std     n\n";
  char line[96];
  for (const auto& r : report.rows) {
    if (r.absent) {
      std::snprintf(line, sizeof(line), "%-6s  %9s  %8s  %4d\n", std::string(label(r.target)).c_str(), "absent",
                    "-", 0);
    } else {
      std::snprintf(line, sizeof(line), "%-6s  %9.2f  %8.2f  %4d\n", std::string(label(r.target)).c_str(),
                    r.psnr_mean, r.psnr_std, r.n);
    }
    out << line;
  }
  return out.str();
}

Image sample_grid(const std::vector<GridTriple>& triples, int gutter) {
  if (triples.empty()) throw std::invalid_argument("sample_grid: no triples");
  if (gutter < 0) throw std::invalid_argument("sample_grid: negative gutter");
  const int w = triples[0].input.width;
  const int h = triples[0].input.height;
  for (const auto& t : triples)
    for (const Image* im : {&t.input, &t.output, &t.truth})
      if (im->width != w || im->height != h)
        throw std::invalid_argument("sample_grid: mixed image sizes (" + std::to_string(im->width) + "x" +
                                    std::to_string(im->height) + " vs " + std::to_string(w) + "x" +
                                    std::to_string(h) + ")");
  const int rows = static_cast<int>(triples.size());
  Image grid(3 * w + 2 * gutter, rows * h + (rows - 1) * gutter, 255);
  for (int r = 0; r < rows; ++r) {
    const Image* cells[3] = {&triples[r].input, &triples[r].output, &triples[r].truth};
    for (int c = 0; c < 3; ++c) {
      const int ox = c * (w + gutter);
      const int oy = r * (h + gutter);
      for (int y = 0; y < h; ++y)
        std::copy_n(&cells[c]->pixels[static_cast<std::size_t>(y) * w * 3], static_cast<std::size_t>(w) * 3,
                    &grid.pixels[(static_cast<std::size_t>(oy + y) * grid.width + ox) * 3]);
    }
  }
  return grid;
}

namespace {

using Rgb = std::array<std::uint8_t, 3>;

void put(Image& img, int x, int y, const Rgb& c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[k];
}

void line(Image& img, int x0, int y0, int x1, int y1, const Rgb& c) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    put(img, x0, y0, c);
    put(img, x0, y0 + 1, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void fill(Image& img, int x0, int y0, int x1, int y1, const Rgb& c) {
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) put(img, x, y, c);
}

}  // namespace

LossPlotInfo export_loss_curve(const std::vector<LossRecord>& records, const std::filesystem::path& csv_path,
                               const std::filesystem::path& png_path) {
  if (records.empty()) throw std::invalid_argument("export_loss_curve: no records");
  write_loss_csv(records, csv_path);

  LossPlotInfo info{records.front().epoch, records.front().epoch, INFINITY, -INFINITY, 720, 420};
  const auto series = [](const LossRecord& r) { return std::array<double, 4>{r.g_gan, r.g_l1, r.d_real, r.d_fake}; };
  for (const auto& r : records) {
    info.x_min = std::min(info.x_min, r.epoch);
    info.x_max = std::max(info.x_max, r.epoch);
    for (double v : series(r)) {
      info.y_min = std::min(info.y_min, v);
      info.y_max = std::max(info.y_max, v);
    }
  }
  if (info.y_max - info.y_min < 1e-12) {
    info.y_min -= 1;
    info.y_max += 1;
  }

  Image img(info.width, info.height, 255);
  const int left = 48, right = info.width - 16, top = 16, bottom = info.height - 32;
  const Rgb axis = {0, 0, 0}, grid = {225, 225, 225};
  for (int i = 1; i < 5; ++i) {
    const int y = top + (bottom - top) * i / 5;
    line(img, left, y, right, y, grid);
  }
  line(img, left, top, left, bottom, axis);
  line(img, left, bottom, right, bottom, axis);

  const auto px = [&](int epoch) {
    if (info.x_max == info.x_min) return (left + right) / 2;
    return left + static_cast<int>(std::lround(static_cast<double>(epoch - info.x_min) * (right - left) /
                                               (info.x_max - info.x_min)));
  };
  const auto py = [&](double v) {
    return bottom - static_cast<int>(std::lround((v - info.y_min) * (bottom - top) / (info.y_max - info.y_min)));
  };
  const std::array<Rgb, 4> colors = {Rgb{31, 119, 180}, Rgb{44, 160, 44}, Rgb{214, 39, 40}, Rgb{255, 127, 14}};
  for (int s = 0; s < 4; ++s) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      const int x = px(records[i].epoch);
      const int y = py(series(records[i])[s]);
      if (i == 0)
        fill(img, x - 1, y - 1, x + 2, y + 2, colors[s]);
      else
        line(img, px(records[i - 1].epoch), py(series(records[i - 1])[s]), x, y, colors[s]);
    }
    fill(img, right - 70 + 16 * s, top + 4, right - 60 + 16 * s, top + 14, colors[s]);
  }
  write_png(img, png_path);
  return info;
}

}  // namespace relightkit
