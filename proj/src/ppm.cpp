#include "ctxnet/ppm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace ctxnet {

namespace {

// Reads the next whitespace-delimited header integer, skipping '#' comments.
int header_int(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= b.size() || !std::isdigit(b[pos])) throw std::runtime_error("ppm: malformed header");
  long v = 0;
  while (pos < b.size() && std::isdigit(b[pos])) {
    v = v * 10 + (b[pos++] - '0');
    if (v > 1 << 20) throw std::runtime_error("ppm: header value out of range");
  }
  return static_cast<int>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_ppm(const Image8& image) {
  if (image.rgb.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    throw std::invalid_argument("ppm: pixel buffer does not match dimensions");
  }
  const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

Image8 decode_ppm(const std::vector<std::uint8_t>& b) {
  if (b.size() < 2 || b[0] != 'P' || b[1] != '6') throw std::runtime_error("ppm: not a binary P6 file");
  std::size_t pos = 2;
  Image8 img;
  img.width = header_int(b, pos);
  img.height = header_int(b, pos);
  const int maxval = header_int(b, pos);
  if (maxval != 255) throw std::runtime_error("ppm: only maxval 255 is supported");
  if (img.width <= 0 || img.height <= 0) throw std::runtime_error("ppm: empty image");
  if (pos >= b.size() || !std::isspace(b[pos])) throw std::runtime_error("ppm: malformed header");
  ++pos;
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height * 3;
  if (b.size() - pos < n) throw std::runtime_error("ppm: truncated pixel data");
  img.rgb.assign(b.begin() + static_cast<std::ptrdiff_t>(pos), b.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

Image8 read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open image '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return decode_ppm(bytes);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_ppm(const std::string& path, const Image8& image) {
  const auto bytes = encode_ppm(image);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write image '" + path + "'");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Tensor image_to_tensor(const Image8& image) {
  const int H = image.height, W = image.width;
  VectorXd v(3 * static_cast<Index>(H) * W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) v[(static_cast<Index>(c) * H + y) * W + x] = image.pixel(x, y)[c] / 255.0;
  return Tensor(Shape{3, H, W}, std::move(v));
}

Image8 tensor_to_image(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 3) throw std::invalid_argument("tensor_to_image: expected (3,H,W), got " + shape_str(t.shape()));
  Image8 img;
  img.height = t.dim(1);
  img.width = t.dim(2);
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = t[(static_cast<Index>(c) * img.height + y) * img.width + x];
        img.pixel(x, y)[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
  return img;
}

}  // namespace ctxnet
