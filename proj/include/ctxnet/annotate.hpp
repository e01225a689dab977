#pragma once

#include "ctxnet/model.hpp"
#include "ctxnet/ppm.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace ctxnet {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kObjectColor{255, 0, 0};
inline constexpr Rgb kContextColor{0, 255, 255};

/// Tag color for a category index.
Rgb category_color(int category);

/// One-pixel rectangle outline; dashed draws 2-on/2-off. Clipped to the image.
void draw_box(Image8& image, const Box& box, const Rgb& color, bool dashed);

/// Context boxes dashed cyan, object boxes solid red, and a 3x3 category tag
/// at each object box's top-left corner. Dimensions are unchanged.
Image8 annotate(const Image8& image, const std::vector<Detection>& detections);

}  // namespace ctxnet
