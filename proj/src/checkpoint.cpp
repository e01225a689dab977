#include "ctxnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace ctxnet {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

void put_bytes(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint: truncated data");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ParamStore& params, const std::string& config) {
  std::vector<std::uint8_t> out{'S', 'C', 'A', 'M'};
  put_u32(out, kCheckpointVersion);
  put_bytes(out, config);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params.entries()) {
    put_bytes(out, name);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int e : t.shape()) put_u32(out, static_cast<std::uint32_t>(e));
    for (Index i = 0; i < t.size(); ++i) put_f32(out, static_cast<float>(t[i]));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "SCAM", 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
  Reader r(body);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config = r.str();
  const std::uint32_t count = r.u32();
  for (std::uint32_t p = 0; p < count; ++p) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int>(r.u32()));
    Tensor t(shape);
    for (Index i = 0; i < t.size(); ++i) t.value()[i] = static_cast<double>(r.f32());
    ckpt.params.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw std::runtime_error("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::string& path, const ParamStore& params, const std::string& config) {
  const auto bytes = serialize_checkpoint(params, config);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

void load_into(ParamStore& params, const Checkpoint& ckpt) {
  if (ckpt.params.size() != params.size()) {
    throw std::invalid_argument("checkpoint holds " + std::to_string(ckpt.params.size()) + " parameters, model has " +
                                std::to_string(params.size()));
  }
  for (const auto& [name, t] : ckpt.params) {
    if (!params.contains(name)) throw std::invalid_argument("checkpoint parameter '" + name + "' not in model");
    Tensor& dst = params.at(name);
    if (dst.shape() != t.shape()) {
      throw std::invalid_argument("checkpoint parameter '" + name + "' has shape " + shape_str(t.shape()) +
                                  ", model expects " + shape_str(dst.shape()));
    }
    dst.value() = t.value();
  }
}

}  // namespace ctxnet
