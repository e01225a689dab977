#pragma once

#include "ctxnet/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ctxnet {

/// Interleaved 8-bit RGB raster.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  std::uint8_t* pixel(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
};

/// Binary P6 with maxval 255. Header comments are accepted on read.
Image8 read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Image8& image);
std::vector<std::uint8_t> encode_ppm(const Image8& image);
Image8 decode_ppm(const std::vector<std::uint8_t>& bytes);

/// (3,H,W) tensor in [0,1] <-> 8-bit raster (round to nearest, clamped).
Tensor image_to_tensor(const Image8& image);
Image8 tensor_to_image(const Tensor& t);

}  // namespace ctxnet
