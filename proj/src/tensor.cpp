#include "ctxnet/tensor.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ctxnet {

namespace {
thread_local bool t_grad_enabled = true;
}

Index numel(const Shape& shape) {
  Index n = 1;
  for (int e : shape) {
    if (e <= 0) throw std::invalid_argument("tensor extents must be positive, got " + shape_str(shape));
    n *= e;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

VectorXd& TensorNode::ensure_grad() {
  if (grad.size() != value.size()) grad = VectorXd::Zero(value.size());
  return grad;
}

Tensor::Tensor(Shape shape, bool requires_grad) : node_(std::make_shared<TensorNode>()) {
  node_->value = VectorXd::Zero(numel(shape));
  node_->shape = std::move(shape);
  node_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, VectorXd values, bool requires_grad) : node_(std::make_shared<TensorNode>()) {
  if (numel(shape) != values.size()) {
    throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not hold " +
                                std::to_string(values.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double v) {
  VectorXd values(1);
  values[0] = v;
  return Tensor(Shape{}, std::move(values));
}

Tensor Tensor::of(Shape shape, std::initializer_list<double> values, bool requires_grad) {
  VectorXd v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
  return node_->value[0];
}

VectorXd Tensor::grad() const {
  if (has_grad()) return node_->grad;
  return VectorXd::Zero(size());
}

void Tensor::zero_grad() { node_->grad = VectorXd::Zero(size()); }

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->value, false); }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  // Iterative post-order DFS gives a topological order without deep recursion.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (TensorNode* n : order) n->grad = VectorXd::Zero(n->value.size());
  loss.node()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

}  // namespace ctxnet
