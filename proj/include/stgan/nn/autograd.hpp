#ifndef STGAN_NN_AUTOGRAD_HPP
#define STGAN_NN_AUTOGRAD_HPP

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "stgan/nn/tensor.hpp"

namespace stgan::nn {

// Minimal tape-free reverse-mode autodiff: every op result keeps its parents
// and a closure that pushes its gradient into them.

template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  Tensor<T>& ensure_grad() {
    if (grad.data.size() != value.data.size()) grad = Tensor<T>(value.shape);
    return grad;
  }
  void zero_grad() { grad = Tensor<T>(); }
};

template <class T>
using Var = std::shared_ptr<Node<T>>;

namespace detail {
inline thread_local bool grad_mode = true;
}

inline bool grad_enabled() { return detail::grad_mode; }

/// Disables graph construction for the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode) { detail::grad_mode = false; }
  ~NoGradGuard() { detail::grad_mode = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <class T>
Var<T> constant(Tensor<T> value) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  return node;
}

template <class T>
Var<T> parameter(Tensor<T> value) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = true;
  return node;
}

/// Detached copy: same value, no history.
template <class T>
Var<T> detach(const Var<T>& x) {
  return constant(x->value);
}

template <class T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents, std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  if (!grad_enabled()) return node;
  bool any = false;
  for (const auto& p : parents) any = any || p->requires_grad;
  if (!any) return node;
  node->requires_grad = true;
  node->parents = std::move(parents);
  node->backward_fn = std::move(backward);
  return node;
}

/// Back-propagates from a scalar root. Parameter gradients accumulate, so
/// callers zero them between steps; intermediate gradients are released as
/// soon as they have been propagated.
template <class T>
void backward(const Var<T>& root) {
  require(root->value.numel() == 1, Errc::ShapeError, "backward needs a scalar root");
  if (!root->requires_grad) return;

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && parent->backward_fn && seen.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad().data[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->grad.empty()) continue;
    node->backward_fn(*node);
    if (node != root.get()) node->zero_grad();
  }
}

}  // namespace stgan::nn

#endif  // STGAN_NN_AUTOGRAD_HPP
