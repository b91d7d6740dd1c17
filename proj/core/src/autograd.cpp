// Copyright 2026 The histcolor Authors
// SPDX-License-Identifier: Apache-2.0

#include "histcolor/autograd.hpp"

#include <unordered_set>

namespace histcolor::ag {
namespace {
thread_local bool g_grad_enabled = true;

template <typename T>
std::vector<Node<T>*> topological_order(Node<T>* root) {
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}
}  // namespace

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
void backward(const Var<T>& root, const Tensor<T>& seed) {
  require(root.defined(), ErrorCode::kContract, "backward on undefined variable");
  require(seed.shape() == root.shape(), ErrorCode::kContract, "backward seed shape mismatch");
  if (!root.requires_grad()) return;
  Node<T>* r = root.node();
  auto& g = r->grad_buffer();
  for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += seed[i];
  auto order = topological_order(r);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

template <typename T>
void backward(const Var<T>& root) {
  backward(root, Tensor<T>(root.shape(), T(1)));
}

template void backward<float>(const Var<float>&);
template void backward<double>(const Var<double>&);
template void backward<float>(const Var<float>&, const Tensor<float>&);
template void backward<double>(const Var<double>&, const Tensor<double>&);

}  // namespace histcolor::ag
