#include "ctxnet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ctxnet {

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const double ih = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

bool contains(const Box& outer, const Box& inner, double eps) {
  return outer.x0() <= inner.x0() + eps && outer.y0() <= inner.y0() + eps && outer.x1() + eps >= inner.x1() &&
         outer.y1() + eps >= inner.y1();
}

std::optional<Box> clip_box(const Box& b, double image_w, double image_h) {
  const double x0 = std::clamp(b.x0(), 0.0, image_w), x1 = std::clamp(b.x1(), 0.0, image_w);
  const double y0 = std::clamp(b.y0(), 0.0, image_h), y1 = std::clamp(b.y1(), 0.0, image_h);
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return Box::from_extent(x0, y0, x1, y1);
}

BoxDelta encode_box_delta(const Box& anchor, const Box& gt) {
  if (!anchor.valid() || !gt.valid()) throw std::invalid_argument("encode_box_delta: non-positive box size");
  return {(gt.cx - anchor.cx) / anchor.w, (gt.cy - anchor.cy) / anchor.h, std::log(gt.w / anchor.w),
          std::log(gt.h / anchor.h)};
}

Box decode_box_delta(const Box& anchor, const BoxDelta& d) {
  if (!anchor.valid()) throw std::invalid_argument("decode_box_delta: non-positive anchor size");
  const double dw = std::clamp(d.dw, -kMaxLogScale, kMaxLogScale);
  const double dh = std::clamp(d.dh, -kMaxLogScale, kMaxLogScale);
  return {anchor.cx + d.dx * anchor.w, anchor.cy + d.dy * anchor.h, anchor.w * std::exp(dw), anchor.h * std::exp(dh)};
}

Box expand_patch(const Box& b, double factor, double image_w, double image_h) {
  if (!(factor >= 1.0)) throw std::invalid_argument("expand_patch: factor must be >= 1, got " + std::to_string(factor));
  if (!b.valid()) throw std::invalid_argument("expand_patch: non-positive box size");
  const Box scaled{b.cx, b.cy, b.w * factor, b.h * factor};
  auto clipped = clip_box(scaled, image_w, image_h);
  if (!clipped) throw std::invalid_argument("expand_patch: box lies outside the image");
  return *clipped;
}

int AnchorGrid::per_cell(std::size_t level, const AnchorConfig& config) const {
  return static_cast<int>(config.levels.at(level).sizes.size() * config.ratios.size());
}

AnchorGrid generate_anchors(int image_w, int image_h, const AnchorConfig& config) {
  if (config.levels.empty() || config.ratios.empty()) throw std::invalid_argument("generate_anchors: empty config");
  AnchorGrid grid;
  for (std::size_t l = 0; l < config.levels.size(); ++l) {
    const AnchorLevel& level = config.levels[l];
    if (level.sizes.empty()) throw std::invalid_argument("generate_anchors: level without sizes");
    if (level.stride <= 0 || image_w % level.stride != 0 || image_h % level.stride != 0) {
      throw std::invalid_argument("generate_anchors: stride " + std::to_string(level.stride) +
                                  " does not divide the image size");
    }
    const int nx = image_w / level.stride, ny = image_h / level.stride;
    grid.level_offset.push_back(grid.anchors.size());
    grid.cells_x.push_back(nx);
    grid.cells_y.push_back(ny);
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x) {
        const double cx = (x + 0.5) * level.stride, cy = (y + 0.5) * level.stride;
        for (std::size_t s = 0; s < level.sizes.size(); ++s) {
          for (std::size_t r = 0; r < config.ratios.size(); ++r) {
            const double ratio = config.ratios[r];
            if (!(ratio > 0)) throw std::invalid_argument("generate_anchors: ratios must be positive");
            const double w = level.sizes[s] / std::sqrt(ratio), h = level.sizes[s] * std::sqrt(ratio);
            grid.anchors.push_back({Box{cx, cy, w, h}, static_cast<int>(l), x, y, static_cast<int>(s),
                                    static_cast<int>(r)});
          }
        }
      }
    }
  }
  return grid;
}

std::vector<MatchTarget> match_anchors(const std::vector<Box>& anchors, const std::vector<Box>& gt, double pos_iou,
                                       double neg_iou) {
  if (!(pos_iou > neg_iou)) throw std::invalid_argument("match_anchors: pos_iou must exceed neg_iou");
  std::vector<MatchTarget> out(anchors.size());
  if (gt.empty()) return out;
  std::vector<double> best_for_gt(gt.size(), 0.0);
  std::vector<int> best_anchor(gt.size(), -1);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    MatchTarget& m = out[a];
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double v = iou(anchors[a], gt[g]);
      if (v > m.max_iou) {
        m.max_iou = v;
        m.gt_index = static_cast<int>(g);
      }
      if (v > best_for_gt[g]) {
        best_for_gt[g] = v;
        best_anchor[g] = static_cast<int>(a);
      }
    }
    if (m.max_iou >= pos_iou) {
      m.kind = MatchKind::kPositive;
    } else if (m.max_iou >= neg_iou) {
      m.kind = MatchKind::kIgnore;
    } else {
      m.kind = MatchKind::kNegative;
      if (m.max_iou == 0.0) m.gt_index = -1;
    }
  }
  for (std::size_t g = 0; g < gt.size(); ++g) {
    if (best_anchor[g] < 0) continue;
    MatchTarget& m = out[static_cast<std::size_t>(best_anchor[g])];
    m.kind = MatchKind::kPositive;
    m.gt_index = static_cast<int>(g);
    m.max_iou = best_for_gt[g];
  }
  return out;
}

std::vector<std::size_t> nms(const std::vector<Box>& boxes, const std::vector<double>& scores, double iou_thresh,
                             std::size_t top_k) {
  if (boxes.size() != scores.size()) throw std::invalid_argument("nms: boxes and scores differ in length");
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    if (kept.size() >= top_k) break;
    bool drop = false;
    for (std::size_t k : kept) {
      if (iou(boxes[i], boxes[k]) > iou_thresh) {
        drop = true;
        break;
      }
    }
    if (!drop) kept.push_back(i);
  }
  return kept;
}

}  // namespace ctxnet
