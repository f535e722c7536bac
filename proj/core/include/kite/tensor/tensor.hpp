#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kite/common/error.hpp"

namespace kite::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

// One vertex of the computation graph. A leaf has no inputs and no backward
// function; an op node owns references to the nodes it was computed from.
template <class Real>
struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads `self.grad` and accumulates into the grads of `self.inputs`.
  std::function<void(Node& self)> backward;

  Real* grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), Real(0));
    return grad.data();
  }
};

// Reference-semantics handle onto a graph node, so an op result can be fed
// into several later ops and gradients from all uses accumulate.
template <class Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<Real>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const auto n = numel(shape);
    return from_values(std::move(shape), std::vector<Real>(n, Real(0)), requires_grad);
  }
  static Tensor full(Shape shape, Real v, bool requires_grad = false) {
    const auto n = numel(shape);
    return from_values(std::move(shape), std::vector<Real>(n, v), requires_grad);
  }
  static Tensor from_values(Shape shape, std::vector<Real> values, bool requires_grad = false) {
    for (auto d : shape) {
      if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
    }
    if (numel(shape) != values.size()) {
      throw ShapeError("shape " + to_string(shape) + " needs " + std::to_string(numel(shape)) +
                       " values, got " + std::to_string(values.size()));
    }
    auto n = std::make_shared<Node<Real>>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }
  static Tensor scalar(Real v, bool requires_grad = false) {
    return from_values({1}, {v}, requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const Real> values() const { return node_->value; }
  std::span<Real> mutable_values() { return node_->value; }
  Real operator[](std::size_t i) const { return node_->value[i]; }
  Real item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const Real> grad() const { return node_->grad; }
  std::span<Real> mutable_grad() {
    node_->grad_buffer();
    return node_->grad;
  }
  void zero_grad() { node_->grad.clear(); }

  std::string_view op() const { return node_->op; }
  const std::shared_ptr<Node<Real>>& node() const { return node_; }

  // Same values, no history.
  Tensor detach() const { return from_values(shape(), node_->value, false); }

  bool all_finite() const {
    for (Real v : node_->value) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

 private:
  std::shared_ptr<Node<Real>> node_;
};

// Gradient recording is on by default; NoGradGuard disables it for the
// current thread (evaluation, optimizer updates).
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Topologically ordered record of the op nodes a loss depends on: every
// node appears after all of its inputs, and each node appears once.
template <class Real>
struct Tape {
  std::vector<Node<Real>*> ops;
};

template <class Real>
Tape<Real> record_tape(const Tensor<Real>& loss);

// Seeds d(loss)/d(loss) = 1 and runs every recorded backward function in
// reverse tape order. Gradients accumulate into leaves that require them.
template <class Real>
void backward(const Tensor<Real>& loss, const Tape<Real>& tape);

template <class Real>
void backward(const Tensor<Real>& loss) {
  backward(loss, record_tape(loss));
}

}  // namespace kite::ad
