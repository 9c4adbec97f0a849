#include "xrn/autodiff.hpp"

#include <unordered_set>
#include <utility>

#include "xrn/error.hpp"

namespace xrn {

template <typename T>
BasicVar<T> BasicVar<T>::leaf(BasicTensor<T> value, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->grad = BasicTensor<T>(value.shape());
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return BasicVar(std::move(node));
}

template <typename T>
BasicTensor<T>& BasicVar<T>::mutable_value() {
  if (!node_->leaf) throw ConfigError(std::string("cannot mutate the value of op result '") + node_->op + "'");
  return node_->value;
}

template <typename T>
void BasicVar<T>::set_requires_grad(bool on) {
  if (!node_->leaf) throw ConfigError("requires_grad can only be changed on leaves");
  node_->requires_grad = on;
  zero_grad();
}

template <typename T>
void BasicVar<T>::zero_grad() {
  if (node_->grad.shape() != node_->value.shape()) {
    node_->grad = BasicTensor<T>(node_->value.shape());
  } else {
    node_->grad.fill(T{0});
  }
}

template <typename T>
BasicVar<T> make_result(BasicTensor<T> value, std::vector<BasicVar<T>> parents, const char* op,
                        std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = op;
  bool any = false;
  for (const auto& p : parents) any = any || (p.defined() && p.requires_grad());
  if (any) {
    node->requires_grad = true;
    node->leaf = false;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.shared());
    node->backward = std::move(backward);
  } else {
    node->grad = BasicTensor<T>(node->value.shape());
  }
  return BasicVar<T>(std::move(node));
}

template <typename T>
BasicTensor<T>& grad_of(Node<T>& node) {
  if (node.grad.shape() != node.value.shape()) node.grad = BasicTensor<T>(node.value.shape());
  return node.grad;
}

template <typename T>
void backward(const BasicVar<T>& root) {
  if (!root.defined()) throw ConfigError("backward on an undefined variable");
  if (root.value().size() != 1) {
    throw ShapeError("backward root must hold exactly one element, got shape " +
                     shape_str(root.shape()));
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS; deep networks would overflow a recursive one.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<T>* n : order) {
    if (!n->leaf) {
      if (n->grad.shape() != n->value.shape()) {
        n->grad = BasicTensor<T>(n->value.shape());
      } else {
        n->grad.fill(T{0});
      }
    }
  }
  grad_of(*root.node())[0] += T{1};

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (!n->leaf && n->backward) n->backward(*n);
  }
}

template class BasicVar<float>;
template class BasicVar<double>;
template BasicVar<float> make_result(BasicTensor<float>, std::vector<BasicVar<float>>, const char*,
                                     std::function<void(Node<float>&)>);
template BasicVar<double> make_result(BasicTensor<double>, std::vector<BasicVar<double>>, const char*,
                                      std::function<void(Node<double>&)>);
template BasicTensor<float>& grad_of(Node<float>&);
template BasicTensor<double>& grad_of(Node<double>&);
template void backward(const BasicVar<float>&);
template void backward(const BasicVar<double>&);

}  // namespace xrn
