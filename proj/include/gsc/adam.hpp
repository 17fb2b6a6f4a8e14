#pragma once

#include <string>

#include "gsc/tensor.hpp"

namespace gsc {

/// First/second moment state for one parameter tensor.
struct AdamState {
  Tensor m;
  Tensor v;
  int64_t step = 0;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update. Throws TrainError naming `label` if the
/// gradient contains non-finite values. Deterministic given inputs.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state, double lr,
               const AdamConfig& cfg, const std::string& label);

}  // namespace gsc
