#pragma once

#include <string>
#include <vector>

#include "kite/tensor/tensor.hpp"

namespace kite::ad {

template <class Real>
struct Parameter {
  std::string name;  // dotted path, e.g. "encoder.0.attn.w_q"
  Tensor<Real> tensor;
};

// Registry of a model's trainable tensors plus non-trainable buffers
// (batch-norm running statistics). Names are unique across both lists.
template <class Real>
class ParameterSet {
 public:
  void add(std::string name, Tensor<Real> tensor) {
    check_new(name);
    tensor.set_requires_grad(true);
    params_.push_back({std::move(name), std::move(tensor)});
  }
  void add_buffer(std::string name, Tensor<Real> tensor) {
    check_new(name);
    buffers_.push_back({std::move(name), std::move(tensor)});
  }

  const std::vector<Parameter<Real>>& params() const { return params_; }
  const std::vector<Parameter<Real>>& buffers() const { return buffers_; }

  // Parameter or buffer by name; nullptr when absent.
  const Tensor<Real>* find(const std::string& name) const {
    for (const auto& p : params_)
      if (p.name == name) return &p.tensor;
    for (const auto& b : buffers_)
      if (b.name == name) return &b.tensor;
    return nullptr;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) {
      auto t = p.tensor;
      t.zero_grad();
    }
  }

 private:
  void check_new(const std::string& name) const {
    if (find(name) != nullptr) throw Error("duplicate parameter name '" + name + "'");
  }
  std::vector<Parameter<Real>> params_;
  std::vector<Parameter<Real>> buffers_;
};

}  // namespace kite::ad
