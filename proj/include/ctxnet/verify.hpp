#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ctxnet {

struct CheckReport {
  std::string name;
  double max_rel_error = 0;
  double tolerance = 0;
  int checked = 0;
  bool pass() const { return checked > 0 && max_rel_error <= tolerance; }
};

inline constexpr double kOperatorTolerance = 1e-4;
inline constexpr double kMicroModelTolerance = 1e-3;

/// Finite-difference check of every differentiable operator on random inputs
/// kept away from kinks and ties. `seed` picks inputs and sampled coordinates.
std::vector<CheckReport> operator_gradchecks(std::uint64_t seed);

/// Whole training objective of a tiny model on one 16x16 sample, checked
/// against every parameter tensor.
CheckReport micro_model_gradcheck(std::uint64_t seed);

}  // namespace ctxnet
