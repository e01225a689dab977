#include "ctxnet/gradcheck.hpp"

#include "ctxnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ctxnet {

GradCheckResult grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& fn, std::vector<Tensor> inputs,
                           const GradCheckOptions& options) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  backward(fn(inputs));
  std::vector<VectorXd> analytic;
  for (const auto& t : inputs) analytic.push_back(t.grad());

  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor& t = inputs[k];
    std::vector<Index> coords(static_cast<std::size_t>(t.size()));
    std::iota(coords.begin(), coords.end(), Index{0});
    if (static_cast<Index>(coords.size()) > options.samples_per_input) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(options.samples_per_input));
    }
    for (Index c : coords) {
      if (options.exclude && options.exclude(inputs, k, c)) continue;
      const double saved = t.value()[c];
      t.value()[c] = saved + options.step;
      const double up = fn(inputs).item();
      t.value()[c] = saved - options.step;
      const double down = fn(inputs).item();
      t.value()[c] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[k][c];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      result.max_rel_error = std::max(result.max_rel_error, err);
      ++result.checked;
    }
  }
  return result;
}

Tensor random_projection(const Tensor& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  VectorXd r(out.size());
  for (Index i = 0; i < r.size(); ++i) r[i] = dist(rng);
  return sum(mul(out, Tensor(out.shape(), std::move(r))));
}

}  // namespace ctxnet
