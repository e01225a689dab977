#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace ctxnet {

/// Axis-aligned box in continuous pixel units, center/size form.
struct Box {
  double cx = 0, cy = 0, w = 0, h = 0;

  double x0() const { return cx - 0.5 * w; }
  double x1() const { return cx + 0.5 * w; }
  double y0() const { return cy - 0.5 * h; }
  double y1() const { return cy + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const { return w > 0 && h > 0; }

  static Box from_extent(double x0, double y0, double x1, double y1) {
    return {0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0};
  }
  bool operator==(const Box&) const = default;
};

/// Regression target relative to an anchor: center offsets in anchor units,
/// log-scale size ratios.
struct BoxDelta {
  double dx = 0, dy = 0, dw = 0, dh = 0;
  bool operator==(const BoxDelta&) const = default;
};

double iou(const Box& a, const Box& b);

/// True when `inner`'s extent lies within `outer`'s, with tolerance `eps`.
bool contains(const Box& outer, const Box& inner, double eps = 1e-9);

/// Intersection with [0,W]x[0,H]; nullopt when nothing is left.
std::optional<Box> clip_box(const Box& b, double image_w, double image_h);

BoxDelta encode_box_delta(const Box& anchor, const Box& gt);
/// Inverse of encode_box_delta. dw, dh are limited to +-kMaxLogScale so exp()
/// cannot overflow on wild regressor outputs.
Box decode_box_delta(const Box& anchor, const BoxDelta& d);
inline constexpr double kMaxLogScale = 8.0;

/// Scales `b` about its center by `factor` (>= 1) and clips to the image.
Box expand_patch(const Box& b, double factor, double image_w, double image_h);

struct AnchorLevel {
  int stride = 8;
  std::vector<double> sizes;  // square-root area, pixels
};

struct AnchorConfig {
  std::vector<AnchorLevel> levels;
  std::vector<double> ratios{1.0, 0.5, 2.0};  // h / w
};

struct Anchor {
  Box box;
  int level = 0;
  int cell_x = 0, cell_y = 0;
  int size_index = 0, ratio_index = 0;
};

/// Flattened anchors, level-major then row, column, size, ratio.
struct AnchorGrid {
  std::vector<Anchor> anchors;
  std::vector<std::size_t> level_offset;  // first anchor index of each level
  std::vector<int> cells_x, cells_y;
  int per_cell(std::size_t level, const AnchorConfig& config) const;
};

AnchorGrid generate_anchors(int image_w, int image_h, const AnchorConfig& config);

enum class MatchKind { kNegative, kIgnore, kPositive };

struct MatchTarget {
  MatchKind kind = MatchKind::kNegative;
  int gt_index = -1;
  double max_iou = 0.0;
};

/// Positive at max-IoU >= pos_iou, negative below neg_iou, ignored between.
/// Each ground truth's best anchor (first on ties, IoU > 0) is forced positive.
std::vector<MatchTarget> match_anchors(const std::vector<Box>& anchors, const std::vector<Box>& gt, double pos_iou,
                                       double neg_iou);

/// Greedy suppression by descending score (lower index first on ties). A box
/// is dropped when its IoU with a kept box exceeds `iou_thresh`.
std::vector<std::size_t> nms(const std::vector<Box>& boxes, const std::vector<double>& scores, double iou_thresh,
                             std::size_t top_k);

}  // namespace ctxnet
