#include "kite/tensor/adam.hpp"

#include <cmath>

namespace kite::ad {

template <class Real>
void adam_step(const ParameterSet<Real>& params, AdamState<Real>& state) {
  for (const auto& p : params.params()) {
    if (!p.tensor.has_grad()) continue;
    for (Real g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + p.name + "'");
    }
  }
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (const auto& p : params.params()) {
    if (!p.tensor.has_grad()) continue;
    auto tensor = p.tensor;
    auto w = tensor.mutable_values();
    const auto g = tensor.grad();
    auto& mom = state.moments[p.name];
    if (mom.first.size() != w.size()) {
      if (!mom.first.empty()) {
        throw NumericError("optimizer moments for '" + p.name + "' do not match parameter size");
      }
      mom.first.assign(w.size(), Real(0));
      mom.second.assign(w.size(), Real(0));
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      double grad = g[i];
      if (!c.decoupled_weight_decay) grad += c.weight_decay * w[i];
      const double m = c.beta1 * mom.first[i] + (1.0 - c.beta1) * grad;
      const double v = c.beta2 * mom.second[i] + (1.0 - c.beta2) * grad * grad;
      mom.first[i] = static_cast<Real>(m);
      mom.second[i] = static_cast<Real>(v);
      double update = c.learning_rate * (m / correction1) / (std::sqrt(v / correction2) + c.epsilon);
      if (c.decoupled_weight_decay) update += c.learning_rate * c.weight_decay * w[i];
      w[i] = static_cast<Real>(w[i] - update);
    }
  }
}

template void adam_step(const ParameterSet<float>&, AdamState<float>&);
template void adam_step(const ParameterSet<double>&, AdamState<double>&);

}  // namespace kite::ad
