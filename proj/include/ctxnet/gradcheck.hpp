#pragma once

#include "ctxnet/tensor.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace ctxnet {

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates sampled per input; all coordinates when the input is smaller.
  int samples_per_input = 16;
  std::uint64_t seed = 1;
  /// Returns true for (input, coordinate) pairs sitting on a non-smooth point.
  std::function<bool(const std::vector<Tensor>&, std::size_t, Index)> exclude;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
};

/// Compares backward() against central differences of a scalar function of
/// `inputs`. Error per coordinate is |a - n| / max(1e-8, |a| + |n|).
GradCheckResult grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& fn, std::vector<Tensor> inputs,
                           const GradCheckOptions& options = {});

/// Reduces an arbitrary-shape output to a scalar through a fixed random
/// projection, so every output coordinate takes part in the check.
Tensor random_projection(const Tensor& out, std::uint64_t seed);

}  // namespace ctxnet
