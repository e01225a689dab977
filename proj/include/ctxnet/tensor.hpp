#pragma once

#include <Eigen/Core>

#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace ctxnet {

using Index = Eigen::Index;
using Shape = std::vector<int>;
using VectorXd = Eigen::VectorXd;
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Index numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// One node of the dynamic computation graph. Leaves have no parents and no
/// backward function; interior nodes accumulate their grad into their parents.
struct TensorNode {
  Shape shape;
  VectorXd value;
  VectorXd grad;  // empty until first touched
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward;
  const char* op = "leaf";

  VectorXd& ensure_grad();
};

/// Shared handle to a row-major double tensor. Copies alias the same storage,
/// matching how parameters are shared between the store and the graph.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, VectorXd values, bool requires_grad = false);
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

  static Tensor scalar(double v);
  static Tensor of(Shape shape, std::initializer_list<double> values, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape.at(static_cast<std::size_t>(i)); }
  Index size() const { return node_->value.size(); }

  const VectorXd& value() const { return node_->value; }
  VectorXd& value() { return node_->value; }
  double operator[](Index i) const { return node_->value[i]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  /// Gradient, or zeros of the value's size when nothing has been accumulated.
  VectorXd grad() const;
  void zero_grad();

  /// Same values, no history, no grad requirement.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

/// Reverse sweep from a single-element tensor. Every node reachable from
/// `loss` gets grad = d loss / d node; reached grads are reset first, so a
/// second call does not accumulate.
void backward(const Tensor& loss);

bool grad_enabled();

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace ctxnet
