#pragma once

#include "ctxnet/geometry.hpp"
#include "ctxnet/tensor.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ctxnet {

enum Category : int { kSquare = 0, kCircle, kTriangle, kCross, kRing, kDot };
inline constexpr int kNumCategories = 6;
inline constexpr std::array<const char*, kNumCategories> kCategoryNames{"square", "circle", "triangle",
                                                                         "cross",  "ring",   "dot"};
int category_from_name(const std::string& name);

struct LabeledBox {
  int category = 0;
  Box box;
};

struct Sample {
  std::string id;
  Tensor image;             // (3,H,W) in [0,1]
  std::vector<int> labels;  // kNumCategories indicators
  std::vector<LabeledBox> boxes;
};

struct DatasetSpec {
  int num_train = 2000;
  int num_val = 500;
  int image_size = 64;
  int min_objects = 1;  // shapes other than dots
  int max_objects = 3;
  double min_size = 10.0;
  double max_size = 22.0;
  double dot_min = 3.0;
  double dot_max = 5.0;
  double dot_probability = 0.5;  // per square
  double max_overlap_iou = 0.3;
  double noise = 0.04;  // background gaussian sigma
  int max_retries = 50;
  std::uint64_t seed = 42;

  void validate() const;
};

/// A shape to rasterize: category, center, size (edge or diameter), colour.
struct ShapeInstance {
  int category = 0;
  double cx = 0, cy = 0, size = 0;
  std::array<double, 3> color{1.0, 1.0, 1.0};
};

/// Rasterizes exactly `shapes` over a noisy background drawn from `rng`.
Sample render_shapes(const DatasetSpec& spec, const std::vector<ShapeInstance>& shapes, std::mt19937_64& rng,
                     std::string id);

/// Draws a random scene: 1..max_objects shapes, plus dots placed next to squares.
Sample render_scene(const DatasetSpec& spec, std::mt19937_64& rng, std::string id);

/// Independent generator stream for sample `index` of `split` (0 train, 1 val).
std::mt19937_64 sample_rng(std::uint64_t seed, int split, int index);

/// Checks labels/boxes agreement, at least one box, boxes inside the image.
/// Throws std::invalid_argument naming the sample.
void validate_sample(const Sample& s);

struct DatasetSummary {
  int num_train = 0;
  int num_val = 0;
  std::array<int, kNumCategories> category_counts{};  // samples containing each category
};

/// Writes <out>/train and <out>/val (images/ + manifest.jsonl) and <out>/summary.json.
DatasetSummary generate_dataset(const DatasetSpec& spec, const std::string& out_dir);

/// Loads one split directory (holding manifest.jsonl).
std::vector<Sample> load_dataset(const std::string& split_dir);
/// Writes samples to a split directory in the same format.
void save_dataset(const std::vector<Sample>& samples, const std::string& split_dir);

std::string manifest_line(const Sample& s, const std::string& image_path);

}  // namespace ctxnet
