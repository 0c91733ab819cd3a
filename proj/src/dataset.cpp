#include "relightkit/dataset.hpp"

#include "relightkit/nn/random.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace relightkit {

namespace {

std::vector<std::string> split_tokens(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<int> parse_int(std::string_view token) {
  if (token.empty()) return std::nullopt;
  int value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

bool valid_temperature(int t) {
  return std::find(kValidTemperaturesK.begin(), kValidTemperaturesK.end(), t) != kValidTemperaturesK.end();
}

std::string join(const std::vector<std::string>& tokens, std::size_t count) {
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i) out += '_';
    out += tokens[i];
  }
  return out;
}

}  // namespace

SampleMeta parse_sample_name(std::string_view filename) {
  std::string_view stem = filename;
  if (const auto slash = stem.find_last_of('/'); slash != std::string_view::npos) stem.remove_prefix(slash + 1);
  if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".png") stem.remove_suffix(4);

  const auto tokens = split_tokens(stem, '_');
  const std::size_t n = tokens.size();
  if (n < 3) throw std::invalid_argument("malformed sample name " + std::string(filename));

  SampleMeta meta;
  std::size_t scene_tokens = 0;
  if (auto idx = parse_int(tokens[n - 1])) {
    if (n < 4 || *idx < 0) throw std::invalid_argument("malformed paired sample name " + std::string(filename));
    meta.index = *idx;
    meta.target = direction_or_throw(tokens[n - 2]);
    meta.source = direction_or_throw(tokens[n - 3]);
    scene_tokens = n - 3;
    if (n >= 5) {
      if (auto temp = parse_int(tokens[n - 4]); temp && valid_temperature(*temp)) {
        meta.temperature_k = *temp;
        scene_tokens = n - 4;
      }
    }
  } else {
    meta.source = direction_or_throw(tokens[n - 1]);
    auto temp = parse_int(tokens[n - 2]);
    if (!temp) throw std::invalid_argument("non-integer temperature token " + tokens[n - 2]);
    if (!valid_temperature(*temp))
      throw std::invalid_argument("unsupported temperature " + tokens[n - 2]);
    meta.temperature_k = *temp;
    scene_tokens = n - 2;
  }
  meta.scene_id = join(tokens, scene_tokens);
  if (meta.scene_id.empty()) throw std::invalid_argument("empty scene id in " + std::string(filename));
  return meta;
}

std::string raw_file_name(const SampleMeta& meta) {
  return meta.scene_id + "_" + std::to_string(meta.temperature_k) + "_" + std::string(label(meta.source)) + ".png";
}

std::string paired_file_name(const SampleMeta& meta) {
  if (!meta.target) throw std::invalid_argument("paired_file_name needs a target direction");
  return meta.scene_id + "_" + std::to_string(meta.temperature_k) + "_" + std::string(label(meta.source)) + "_" +
         std::string(label(*meta.target)) + "_" + std::to_string(meta.index) + ".png";
}

std::vector<TrainingPair> build_pairs(const std::vector<RawSample>& raw, Direction target, bool include_identity) {
  // scene -> (direction -> sample)
  std::map<std::string, std::map<int, const RawSample*>> scenes;
  for (const auto& s : raw) {
    auto& slot = scenes[s.meta.scene_id][index_of(s.meta.source)];
    if (slot != nullptr)
      throw std::invalid_argument("duplicate image for scene " + s.meta.scene_id + " direction " +
                                  std::string(label(s.meta.source)));
    slot = &s;
  }

  std::vector<std::string> missing;
  for (const auto& [scene, by_dir] : scenes)
    if (!by_dir.contains(index_of(target))) missing.push_back(scene);
  if (!missing.empty()) {
    std::string msg = "scenes missing the " + std::string(label(target)) + " image:";
    for (const auto& m : missing) msg += " " + m;
    throw std::invalid_argument(msg);
  }

  std::vector<TrainingPair> pairs;
  int index = 0;
  for (const auto& [scene, by_dir] : scenes) {
    const RawSample& tgt = *by_dir.at(index_of(target));
    for (const auto& [dir_index, sample] : by_dir) {
      if (dir_index == index_of(target) && !include_identity) continue;
      if (sample->meta.temperature_k != tgt.meta.temperature_k)
        throw std::invalid_argument("scene " + scene + " mixes temperatures");
      if (!sample->image.same_size(tgt.image))
        throw std::invalid_argument("scene " + scene + " has images of different sizes");
      TrainingPair p;
      p.input = sample->image;
      p.target = tgt.image;
      p.meta = sample->meta;
      p.meta.target = target;
      p.meta.index = index++;
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                            std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("cannot split an empty list");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train fraction must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  nn::Rng rng(seed);
  nn::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

Split<TrainingPair> split_train_test(const std::vector<TrainingPair>& pairs, double train_fraction,
                                     std::uint64_t seed, SplitMode mode) {
  Split<TrainingPair> out;
  if (mode == SplitMode::by_pair) {
    const auto [train, test] = split_indices(pairs.size(), train_fraction, seed);
    for (auto i : train) out.train.push_back(pairs[i]);
    for (auto i : test) out.test.push_back(pairs[i]);
    return out;
  }
  if (pairs.empty()) throw std::invalid_argument("cannot split an empty list");
  std::vector<std::string> scenes;
  for (const auto& p : pairs)
    if (std::find(scenes.begin(), scenes.end(), p.meta.scene_id) == scenes.end()) scenes.push_back(p.meta.scene_id);
  const auto [train_scenes_idx, test_scenes_idx] = split_indices(scenes.size(), train_fraction, seed);
  std::set<std::string> train_scenes;
  for (auto i : train_scenes_idx) train_scenes.insert(scenes[i]);
  for (const auto& p : pairs) (train_scenes.contains(p.meta.scene_id) ? out.train : out.test).push_back(p);
  return out;
}

Image encode_pair_image(const TrainingPair& pair) {
  if (!pair.input.same_size(pair.target))
    throw std::invalid_argument("pair images differ in size");
  const int w = pair.input.width, h = pair.input.height;
  Image out(2 * w, h);
  for (int y = 0; y < h; ++y) {
    auto* row = &out.pixels[static_cast<std::size_t>(y) * out.width * 3];
    std::copy_n(&pair.input.pixels[static_cast<std::size_t>(y) * w * 3], w * 3, row);
    std::copy_n(&pair.target.pixels[static_cast<std::size_t>(y) * w * 3], w * 3, row + w * 3);
  }
  return out;
}

TrainingPair decode_pair_image(const Image& combined, SampleMeta meta) {
  if (combined.width % 2 != 0 || combined.width != 2 * combined.height)
    throw std::invalid_argument("paired image must be 2H wide and H tall, got " + std::to_string(combined.width) +
                                "x" + std::to_string(combined.height));
  const int w = combined.width / 2, h = combined.height;
  TrainingPair p;
  p.input = Image(w, h);
  p.target = Image(w, h);
  p.meta = std::move(meta);
  for (int y = 0; y < h; ++y) {
    const auto* row = &combined.pixels[static_cast<std::size_t>(y) * combined.width * 3];
    std::copy_n(row, w * 3, &p.input.pixels[static_cast<std::size_t>(y) * w * 3]);
    std::copy_n(row + w * 3, w * 3, &p.target.pixels[static_cast<std::size_t>(y) * w * 3]);
  }
  return p;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest " + file.string());
  for (const auto& e : entries) {
    out << e.path << '\t' << e.meta.scene_id << '\t' << e.meta.temperature_k << '\t' << label(e.meta.source) << '\t'
        << (e.meta.target ? std::string(label(*e.meta.target)) : std::string("-")) << '\n';
  }
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read manifest " + file.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_tokens(line, '\t');
    if (fields.size() != 5)
      throw std::invalid_argument(file.string() + ":" + std::to_string(line_no) + ": expected 5 tab-separated fields");
    ManifestEntry e;
    e.path = fields[0];
    e.meta.scene_id = fields[1];
    const auto temp = parse_int(fields[2]);
    if (!temp) throw std::invalid_argument("non-integer temperature token " + fields[2]);
    e.meta.temperature_k = *temp;
    e.meta.source = direction_or_throw(fields[3]);
    if (fields[4] != "-") e.meta.target = direction_or_throw(fields[4]);
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<RawSample> load_raw_directory(const std::filesystem::path& dir, int temperature_k, int size) {
  namespace fs = std::filesystem;
  std::vector<ManifestEntry> entries;
  if (fs::exists(dir / "manifest.tsv")) {
    entries = read_manifest(dir / "manifest.tsv");
  } else {
    for (const auto& f : fs::directory_iterator(dir)) {
      if (f.path().extension() != ".png") continue;
      entries.push_back({f.path().filename().string(), parse_sample_name(f.path().filename().string())});
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  }
  std::vector<RawSample> raw;
  for (const auto& e : entries) {
    if (e.meta.temperature_k != temperature_k || e.meta.target) continue;
    const fs::path p = fs::path(e.path).is_absolute() ? fs::path(e.path) : dir / e.path;
    raw.push_back({e.meta, resize_area(read_png(p), size, size)});
  }
  return raw;
}

std::vector<TrainingPair> load_pair_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& f : fs::directory_iterator(dir))
    if (f.path().extension() == ".png") files.push_back(f.path());
  std::sort(files.begin(), files.end());
  std::vector<TrainingPair> pairs;
  for (const auto& f : files) {
    SampleMeta meta = parse_sample_name(f.filename().string());
    if (!meta.target) throw std::invalid_argument("not a paired sample: " + f.string());
    pairs.push_back(decode_pair_image(read_png(f), meta));
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.meta.index < b.meta.index; });
  return pairs;
}

void write_pair_directory(const std::vector<TrainingPair>& pairs, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& p : pairs) write_png(encode_pair_image(p), dir / paired_file_name(p.meta));
}

}  // namespace relightkit
