#include "gsc/adam.hpp"

#include <cmath>

#include "gsc/errors.hpp"

namespace gsc {

void adam_step(Tensor& param, const Tensor& grad, AdamState& state, double lr,
               const AdamConfig& cfg, const std::string& label) {
  require_same_shape(param, grad, "adam_step");
  if (state.step == 0) {
    state.m = Tensor::zeros_like(param);
    state.v = Tensor::zeros_like(param);
  }
  require_same_shape(param, state.m, "adam_step state");

  if (!grad.all_finite()) {
    throw TrainError("non-finite gradient for parameter '" + label + "'");
  }

  state.step += 1;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  double* p = param.data();
  double* m = state.m.data();
  double* v = state.v.data();
  const double* g = grad.data();
  for (int64_t i = 0; i < param.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    double mhat = m[i] / corr1;
    double vhat = v[i] / corr2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace gsc
