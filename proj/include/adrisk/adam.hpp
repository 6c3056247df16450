#pragma once

#include <vector>

#include "adrisk/params.hpp"

namespace adrisk::ad {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // plain L2, added to the gradient
};

// Bias-corrected Adam moment accumulators, aligned entry-for-entry with a
// ParamStore.
struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::vector<Tensor> m, v;

  static AdamState init(const ParamStore& params, AdamConfig cfg = {});
};

// One update over every parameter. grads must align with the store; a NaN
// gradient raises NumericError naming the offending parameter.
void adam_step(ParamStore& params, const std::vector<Tensor>& grads, AdamState& state);

}  // namespace adrisk::ad
