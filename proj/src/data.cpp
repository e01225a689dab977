#include "ctxnet/data.hpp"

#include "ctxnet/ppm.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ctxnet {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

int category_from_name(const std::string& name) {
  for (int c = 0; c < kNumCategories; ++c)
    if (name == kCategoryNames[static_cast<std::size_t>(c)]) return c;
  throw std::invalid_argument("unknown category '" + name + "'");
}

void DatasetSpec::validate() const {
  if (num_train <= 0 || num_val <= 0) throw std::invalid_argument("dataset: num_train and num_val must be positive");
  if (image_size < 16) throw std::invalid_argument("dataset: image_size must be at least 16");
  if (min_objects < 1 || max_objects < min_objects) throw std::invalid_argument("dataset: bad objects-per-image range");
  if (!(min_size > 0 && max_size >= min_size && max_size < image_size)) {
    throw std::invalid_argument("dataset: bad shape size range");
  }
  if (!(dot_min > 0 && dot_max >= dot_min)) throw std::invalid_argument("dataset: bad dot size range");
  if (!(dot_probability >= 0 && dot_probability <= 1)) throw std::invalid_argument("dataset: dot_probability not in [0,1]");
  if (!(noise >= 0)) throw std::invalid_argument("dataset: noise must be non-negative");
}

std::mt19937_64 sample_rng(std::uint64_t seed, int split, int index) {
  // splitmix64 over (seed, split, index) so streams never overlap by construction.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(split) * 0x100000000ULL +
                                                    static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return std::mt19937_64(z);
}

namespace {

bool inside_shape(const ShapeInstance& s, double px, double py) {
  const double dx = px - s.cx, dy = py - s.cy, half = 0.5 * s.size;
  switch (s.category) {
    case kSquare:
      return std::abs(dx) <= half && std::abs(dy) <= half;
    case kCircle:
    case kDot:
      return dx * dx + dy * dy <= half * half;
    case kRing: {
      const double t = std::max(2.0, 0.2 * s.size);
      const double d2 = dx * dx + dy * dy;
      return d2 <= half * half && d2 >= (half - t) * (half - t);
    }
    case kCross: {
      const double arm = s.size / 6.0;
      return (std::abs(dx) <= arm && std::abs(dy) <= half) || (std::abs(dy) <= arm && std::abs(dx) <= half);
    }
    case kTriangle: {
      const double top = s.cy - half;
      if (py < top || py > s.cy + half) return false;
      return std::abs(dx) <= 0.5 * (py - top);
    }
    default:
      throw std::invalid_argument("render: unknown category " + std::to_string(s.category));
  }
}

Box shape_box(const ShapeInstance& s) { return {s.cx, s.cy, s.size, s.size}; }

}  // namespace

Sample render_shapes(const DatasetSpec& spec, const std::vector<ShapeInstance>& shapes, std::mt19937_64& rng,
                     std::string id) {
  const int n = spec.image_size;
  std::uniform_real_distribution<double> base(0.0, 0.3);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double bg[3] = {base(rng), base(rng), base(rng)};
  VectorXd pix(3 * static_cast<Index>(n) * n);
  for (int c = 0; c < 3; ++c)
    for (Index i = 0; i < static_cast<Index>(n) * n; ++i)
      pix[c * n * n + i] = std::clamp(bg[c] + spec.noise * noise(rng), 0.0, 1.0);

  Sample s;
  s.id = std::move(id);
  s.labels.assign(kNumCategories, 0);
  for (const ShapeInstance& shape : shapes) {
    const Box b = shape_box(shape);
    const int x0 = std::max(0, static_cast<int>(std::floor(b.x0()))), x1 = std::min(n, static_cast<int>(std::ceil(b.x1())));
    const int y0 = std::max(0, static_cast<int>(std::floor(b.y0()))), y1 = std::min(n, static_cast<int>(std::ceil(b.y1())));
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x)
        if (inside_shape(shape, x + 0.5, y + 0.5))
          for (int c = 0; c < 3; ++c) pix[(static_cast<Index>(c) * n + y) * n + x] = shape.color[static_cast<std::size_t>(c)];
    s.labels[static_cast<std::size_t>(shape.category)] = 1;
    s.boxes.push_back({shape.category, b});
  }
  s.image = Tensor(Shape{3, n, n}, std::move(pix));
  return s;
}

Sample render_scene(const DatasetSpec& spec, std::mt19937_64& rng, std::string id) {
  const double n = spec.image_size;
  std::uniform_int_distribution<int> count(spec.min_objects, spec.max_objects);
  std::uniform_int_distribution<int> category(0, kDot - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto color = [&] { return std::array<double, 3>{uniform(0.45, 1.0), uniform(0.45, 1.0), uniform(0.45, 1.0)}; };
  auto fits = [&](const Box& b, const std::vector<ShapeInstance>& placed, double max_iou) {
    for (const auto& p : placed)
      if (iou(b, shape_box(p)) > max_iou) return false;
    return true;
  };

  std::vector<ShapeInstance> shapes;
  const int wanted = count(rng);
  for (int k = 0; k < wanted; ++k) {
    const int cat = category(rng);
    for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
      ShapeInstance s{cat, 0, 0, uniform(spec.min_size, spec.max_size), color()};
      s.cx = uniform(0.5 * s.size, n - 0.5 * s.size);
      s.cy = uniform(0.5 * s.size, n - 0.5 * s.size);
      if (fits(shape_box(s), shapes, spec.max_overlap_iou)) {
        shapes.push_back(s);
        break;
      }
    }
  }

  // Dots sit just outside a square's edge and must not touch any other box.
  std::vector<ShapeInstance> dots;
  for (const ShapeInstance& sq : std::vector<ShapeInstance>(shapes)) {
    if (sq.category != kSquare || unit(rng) >= spec.dot_probability) continue;
    for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
      const double d = uniform(spec.dot_min, spec.dot_max);
      const double theta = uniform(0.0, 2.0 * std::numbers::pi);
      const double edge = 0.5 * sq.size / std::max(std::abs(std::cos(theta)), std::abs(std::sin(theta)));
      const double dist = edge + 0.5 * d + uniform(1.0, 3.0);
      if (dist > 1.5 * sq.size) continue;
      ShapeInstance dot{kDot, sq.cx + dist * std::cos(theta), sq.cy + dist * std::sin(theta), d, color()};
      const Box db = shape_box(dot);
      if (db.x0() < 0 || db.y0() < 0 || db.x1() > n || db.y1() > n) continue;
      if (!fits(db, shapes, 0.0) || !fits(db, dots, 0.0)) continue;
      dots.push_back(dot);
      break;
    }
  }
  shapes.insert(shapes.end(), dots.begin(), dots.end());
  return render_shapes(spec, shapes, rng, std::move(id));
}

void validate_sample(const Sample& s) {
  auto fail = [&](const std::string& why) { throw std::invalid_argument("sample '" + s.id + "': " + why); };
  if (s.labels.size() != kNumCategories) fail("label vector has wrong length");
  if (s.boxes.empty()) fail("no boxes");
  const double W = s.image.defined() ? s.image.dim(2) : 0, H = s.image.defined() ? s.image.dim(1) : 0;
  std::vector<int> from_boxes(kNumCategories, 0);
  for (const auto& lb : s.boxes) {
    if (lb.category < 0 || lb.category >= kNumCategories) fail("box category out of range");
    if (!lb.box.valid()) fail("box with non-positive size");
    const double eps = 1e-9;
    if (lb.box.x0() < -eps || lb.box.y0() < -eps || lb.box.x1() > W + eps || lb.box.y1() > H + eps) {
      fail("box outside image bounds");
    }
    from_boxes[static_cast<std::size_t>(lb.category)] = 1;
  }
  if (from_boxes != s.labels) fail("labels disagree with boxes");
}

std::string manifest_line(const Sample& s, const std::string& image_path) {
  ordered_json j;
  j["id"] = s.id;
  j["image"] = image_path;
  ordered_json labels = ordered_json::array();
  for (int c = 0; c < kNumCategories; ++c)
    if (s.labels[static_cast<std::size_t>(c)]) labels.push_back(c);
  j["labels"] = labels;
  ordered_json boxes = ordered_json::array();
  for (const auto& lb : s.boxes) {
    boxes.push_back({{"class", lb.category}, {"cx", lb.box.cx}, {"cy", lb.box.cy}, {"w", lb.box.w}, {"h", lb.box.h}});
  }
  j["boxes"] = boxes;
  return j.dump();
}

void save_dataset(const std::vector<Sample>& samples, const std::string& split_dir) {
  std::error_code ec;
  fs::create_directories(fs::path(split_dir) / "images", ec);
  if (ec) throw std::runtime_error("cannot create '" + split_dir + "': " + ec.message());
  std::ofstream manifest(fs::path(split_dir) / "manifest.jsonl", std::ios::binary | std::ios::trunc);
  if (!manifest) throw std::runtime_error("cannot write manifest in '" + split_dir + "'");
  for (const Sample& s : samples) {
    const std::string rel = "images/" + s.id + ".ppm";
    write_ppm((fs::path(split_dir) / rel).string(), tensor_to_image(s.image));
    manifest << manifest_line(s, rel) << '\n';
  }
  if (!manifest) throw std::runtime_error("failed writing manifest in '" + split_dir + "'");
}

DatasetSummary generate_dataset(const DatasetSpec& spec, const std::string& out_dir) {
  spec.validate();
  DatasetSummary summary;
  summary.num_train = spec.num_train;
  summary.num_val = spec.num_val;
  const char* split_names[2] = {"train", "val"};
  const int split_sizes[2] = {spec.num_train, spec.num_val};
  for (int split = 0; split < 2; ++split) {
    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(split_sizes[split]));
    for (int i = 0; i < split_sizes[split]; ++i) {
      auto rng = sample_rng(spec.seed, split, i);
      char id[32];
      std::snprintf(id, sizeof id, "%s_%05d", split_names[split], i);
      samples.push_back(render_scene(spec, rng, id));
      for (int c = 0; c < kNumCategories; ++c) summary.category_counts[static_cast<std::size_t>(c)] += samples.back().labels[static_cast<std::size_t>(c)];
    }
    save_dataset(samples, (fs::path(out_dir) / split_names[split]).string());
  }
  ordered_json j;
  j["num_train"] = summary.num_train;
  j["num_val"] = summary.num_val;
  j["image_size"] = spec.image_size;
  j["seed"] = spec.seed;
  ordered_json counts;
  for (int c = 0; c < kNumCategories; ++c) counts[kCategoryNames[static_cast<std::size_t>(c)]] = summary.category_counts[static_cast<std::size_t>(c)];
  j["category_counts"] = counts;
  std::ofstream os(fs::path(out_dir) / "summary.json", std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write summary in '" + out_dir + "'");
  os << j.dump(2) << '\n';
  return summary;
}

std::vector<Sample> load_dataset(const std::string& split_dir) {
  const fs::path manifest_path = fs::path(split_dir) / "manifest.jsonl";
  std::ifstream is(manifest_path);
  if (!is) throw std::runtime_error("cannot open manifest '" + manifest_path.string() + "'");
  std::vector<Sample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = manifest_path.string() + ":" + std::to_string(line_no) + ": ";
    Sample s;
    try {
      const auto j = nlohmann::json::parse(line);
      s.id = j.at("id").get<std::string>();
      const std::string rel = j.at("image").get<std::string>();
      s.labels.assign(kNumCategories, 0);
      for (const auto& c : j.at("labels")) {
        const int cat = c.get<int>();
        if (cat < 0 || cat >= kNumCategories) throw std::invalid_argument("label index out of range");
        s.labels[static_cast<std::size_t>(cat)] = 1;
      }
      for (const auto& b : j.at("boxes")) {
        s.boxes.push_back({b.at("class").get<int>(), Box{b.at("cx").get<double>(), b.at("cy").get<double>(),
                                                          b.at("w").get<double>(), b.at("h").get<double>()}});
      }
      s.image = image_to_tensor(read_ppm((fs::path(split_dir) / rel).string()));
      validate_sample(s);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(where + "malformed manifest line: " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(where + e.what());
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace ctxnet
