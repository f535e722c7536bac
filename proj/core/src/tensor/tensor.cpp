#include "kite/tensor/tensor.hpp"

#include <unordered_set>
#include <utility>

namespace kite::ad {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <class Real>
Tape<Real> record_tape(const Tensor<Real>& loss) {
  Tape<Real> tape;
  if (!loss.defined()) return tape;
  // Iterative post-order DFS; graphs for deep encoders get long.
  std::unordered_set<const Node<Real>*> seen;
  std::vector<std::pair<Node<Real>*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<Real>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    if (node->backward) tape.ops.push_back(node);
    stack.pop_back();
  }
  return tape;
}

template <class Real>
void backward(const Tensor<Real>& loss, const Tape<Real>& tape) {
  if (loss.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;
  auto* root = loss.node().get();
  root->grad_buffer()[0] += Real(1);
  for (auto it = tape.ops.rbegin(); it != tape.ops.rend(); ++it) {
    Node<Real>* n = *it;
    if (n->grad.empty()) continue;
    n->backward(*n);
  }
}

template Tape<float> record_tape(const Tensor<float>&);
template Tape<double> record_tape(const Tensor<double>&);
template void backward(const Tensor<float>&, const Tape<float>&);
template void backward(const Tensor<double>&, const Tape<double>&);

}  // namespace kite::ad
