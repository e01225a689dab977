#pragma once

#include "ctxnet/optim.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ctxnet {

// Binary little-endian layout:
//   "SCAM" | version u32 | config_len u32 | config UTF-8 bytes | param_count u32 |
//   per parameter: name_len u32 | name | rank u32 | extents u32 x rank | values f32 x numel
// Frozen status is not stored.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config;  // architecture description, JSON text
  std::vector<std::pair<std::string, Tensor>> params;
};

std::vector<std::uint8_t> serialize_checkpoint(const ParamStore& params, const std::string& config);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const ParamStore& params, const std::string& config);
Checkpoint load_checkpoint(const std::string& path);

/// Copies checkpoint values into `params`; names and shapes must match exactly.
void load_into(ParamStore& params, const Checkpoint& ckpt);

}  // namespace ctxnet
