#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "xrn/tensor.hpp"

namespace xrn {

template <typename T>
struct Node {
  BasicTensor<T> value;
  BasicTensor<T> grad;
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents that require grad.
  std::function<void(Node&)> backward;
};

/// Handle to a graph node. Copies share the node; parameters are leaves
/// whose gradient accumulates across backward passes until zero_grad().
template <typename T>
class BasicVar {
 public:
  BasicVar() = default;
  explicit BasicVar(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static BasicVar leaf(BasicTensor<T> value, bool requires_grad = false);
  static BasicVar param(BasicTensor<T> value) { return leaf(std::move(value), true); }

  bool defined() const noexcept { return static_cast<bool>(node_); }
  explicit operator bool() const noexcept { return defined(); }

  const BasicTensor<T>& value() const { return node_->value; }
  /// In-place access for optimizers and checkpoint loading. Only legal on leaves.
  BasicTensor<T>& mutable_value();
  const BasicTensor<T>& grad() const { return node_->grad; }
  BasicTensor<T>& mutable_grad() { return node_->grad; }
  const Shape& shape() const { return node_->value.shape(); }

  bool requires_grad() const { return node_->requires_grad; }
  /// Toggles participation of a leaf; clears its gradient when disabled.
  void set_requires_grad(bool on);
  void zero_grad();
  bool is_leaf() const { return node_->leaf; }
  const char* op() const { return node_->op; }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& shared() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

using Var = BasicVar<float>;
using VarD = BasicVar<double>;

/// Creates an op result. If no parent requires grad the result is a constant
/// leaf and `backward` is dropped, so frozen subgraphs record nothing.
template <typename T>
BasicVar<T> make_result(BasicTensor<T> value, std::vector<BasicVar<T>> parents, const char* op,
                        std::function<void(Node<T>&)> backward);

/// Gradient buffer of a parent, allocated as zeros on first use.
template <typename T>
BasicTensor<T>& grad_of(Node<T>& node);

/// Reverse-mode sweep from a one-element root. Leaf gradients accumulate;
/// interior gradients are reset at the start of each sweep.
template <typename T>
void backward(const BasicVar<T>& root);

}  // namespace xrn
