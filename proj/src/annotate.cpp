#include "ctxnet/annotate.hpp"

#include <algorithm>
#include <cmath>

namespace ctxnet {

Rgb category_color(int category) {
  static constexpr Rgb palette[] = {{255, 255, 0}, {0, 255, 0}, {255, 0, 255},
                                    {255, 128, 0}, {0, 128, 255}, {255, 255, 255}};
  constexpr int n = static_cast<int>(std::size(palette));
  return palette[((category % n) + n) % n];
}

namespace {

void put(Image8& image, int x, int y, const Rgb& c) {
  if (x < 0 || y < 0 || x >= image.width || y >= image.height) return;
  std::copy(c.begin(), c.end(), image.pixel(x, y));
}

}  // namespace

void draw_box(Image8& image, const Box& box, const Rgb& color, bool dashed) {
  const int x0 = static_cast<int>(std::floor(box.x0()));
  const int y0 = static_cast<int>(std::floor(box.y0()));
  const int x1 = std::max(x0, static_cast<int>(std::ceil(box.x1())) - 1);
  const int y1 = std::max(y0, static_cast<int>(std::ceil(box.y1())) - 1);
  auto on = [dashed](int i) { return !dashed || (i / 2) % 2 == 0; };
  for (int x = x0; x <= x1; ++x) {
    if (!on(x - x0)) continue;
    put(image, x, y0, color);
    put(image, x, y1, color);
  }
  for (int y = y0; y <= y1; ++y) {
    if (!on(y - y0)) continue;
    put(image, x0, y, color);
    put(image, x1, y, color);
  }
}

Image8 annotate(const Image8& image, const std::vector<Detection>& detections) {
  Image8 out = image;
  for (const Detection& d : detections) draw_box(out, d.context, kContextColor, true);
  for (const Detection& d : detections) {
    draw_box(out, d.proposal, kObjectColor, false);
    const int x0 = static_cast<int>(std::floor(d.proposal.x0())) + 1;
    const int y0 = static_cast<int>(std::floor(d.proposal.y0())) + 1;
    const Rgb tag = category_color(d.category);
    for (int dy = 0; dy < 3; ++dy)
      for (int dx = 0; dx < 3; ++dx) put(out, x0 + dx, y0 + dy, tag);
  }
  return out;
}

}  // namespace ctxnet
