#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kite/tensor/parameter.hpp"

namespace kite::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // false: L2 term added to the gradient before the moment updates (classic
  // Adam with L2). true: decoupled decay applied to the weights directly.
  bool decoupled_weight_decay = false;
};

template <class Real>
struct AdamMoments {
  std::vector<Real> first;
  std::vector<Real> second;
};

template <class Real>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, AdamMoments<Real>> moments;  // keyed by parameter name
};

// One bias-corrected Adam update over every parameter that holds a gradient.
// Throws NumericError naming the parameter if a gradient is not finite.
template <class Real>
void adam_step(const ParameterSet<Real>& params, AdamState<Real>& state);

}  // namespace kite::ad
