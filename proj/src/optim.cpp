#include "ctxnet/optim.hpp"

#include <cmath>
#include <utility>

namespace ctxnet {

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  t.set_requires_grad(true);
  index_[name] = entries_.size();
  entries_.emplace_back(name, std::move(t));
  return entries_.back().second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

void ParamStore::freeze(const std::string& name) {
  if (!contains(name)) throw std::out_of_range("cannot freeze unknown parameter '" + name + "'");
  frozen_.insert(name);
}

std::size_t ParamStore::freeze_prefix(const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) {
    if (name.rfind(prefix, 0) == 0) {
      frozen_.insert(name);
      ++n;
    }
  }
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

ParamStore ParamStore::snapshot() const {
  ParamStore copy;
  for (const auto& [name, t] : entries_) copy.add(name, t.clone());
  copy.frozen_ = frozen_;
  return copy;
}

void ParamStore::assign(const ParamStore& other) {
  if (other.size() != size()) throw std::invalid_argument("assign: parameter count differs");
  for (auto& [name, t] : entries_) {
    const Tensor& src = other.at(name);
    if (src.shape() != t.shape()) {
      throw std::invalid_argument("assign: shape of '" + name + "' differs: " + shape_str(t.shape()) + " vs " +
                                  shape_str(src.shape()));
    }
    t.value() = src.value();
  }
}

void sgd_step(ParamStore& params, OptimState& state) {
  for (const auto& [name, t] : std::as_const(params).entries()) {
    if (params.is_frozen(name)) continue;
    if (t.has_grad() && !t.grad().allFinite()) throw NonFiniteGradient(name);
  }
  for (auto& [name, t] : params.entries()) {
    if (params.is_frozen(name)) {
      state.velocity.erase(name);
      continue;
    }
    auto [it, inserted] = state.velocity.try_emplace(name, VectorXd::Zero(t.size()));
    VectorXd& v = it->second;
    const VectorXd g = t.grad();
    v = state.momentum * v - state.learning_rate * (g + state.weight_decay * t.value());
    t.value() += v;
  }
}

Tensor init_uniform_fan_in(Shape shape, int fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape), true);
  for (Index i = 0; i < t.size(); ++i) t.value()[i] = dist(rng);
  return t;
}

}  // namespace ctxnet
