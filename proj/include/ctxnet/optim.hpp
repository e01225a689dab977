#pragma once

#include "ctxnet/tensor.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ctxnet {

/// Named parameters in insertion order plus the set excluded from updates.
class ParamStore {
 public:
  /// Registers a parameter; the tensor is marked requires_grad.
  Tensor& add(const std::string& name, Tensor t);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }

  void freeze(const std::string& name);
  /// Freezes every parameter whose name starts with `prefix`; returns the count.
  std::size_t freeze_prefix(const std::string& prefix);
  void unfreeze_all() { frozen_.clear(); }
  bool is_frozen(const std::string& name) const { return frozen_.count(name) != 0; }
  const std::set<std::string>& frozen() const { return frozen_; }

  void zero_grad();
  /// Deep copy of all values (frozen set included, no grads).
  ParamStore snapshot() const;
  /// Overwrites values from `other`, which must hold the same names and shapes.
  void assign(const ParamStore& other);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::set<std::string> frozen_;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(const std::string& param)
      : std::runtime_error("non-finite gradient in parameter '" + param + "'"), param_(param) {}
  const std::string& param() const { return param_; }

 private:
  std::string param_;
};

struct OptimState {
  double learning_rate = 0.002;
  double momentum = 0.5;
  double weight_decay = 0.01;
  std::map<std::string, VectorXd> velocity;
};

/// v <- momentum*v - lr*(g + weight_decay*w); w <- w + v, for each non-frozen
/// parameter. Every gradient is checked before anything is written, so a
/// non-finite gradient leaves parameters and velocities untouched.
void sgd_step(ParamStore& params, OptimState& state);

/// Fan-in scaled uniform: U(-b, b) with b = sqrt(6 / fan_in).
Tensor init_uniform_fan_in(Shape shape, int fan_in, std::mt19937_64& rng);

}  // namespace ctxnet
