#include "gsc/shift.hpp"

#include <cmath>
#include <cstdint>
#include <utility>

#include "gsc/errors.hpp"
#include "gsc/image.hpp"

namespace gsc {

std::vector<DiscretePmf> conditional_pmfs(const Conditioning& cond) {
  require_same_shape(cond.mu, cond.sigma, "conditioning grids");
  std::vector<DiscretePmf> pmfs;
  pmfs.reserve(static_cast<size_t>(cond.mu.size()));
  for (int64_t i = 0; i < cond.mu.size(); ++i) {
    pmfs.push_back(discretize_gaussian(cond.mu[i], cond.sigma[i]));
  }
  return pmfs;
}

double coded_bits_total(const Tensor& latents, const std::vector<DiscretePmf>& pmfs) {
  if (static_cast<size_t>(latents.size()) != pmfs.size()) {
    throw DimensionError("coded_bits_total: latents and tables disagree in length");
  }
  double bits = 0.0;
  for (int64_t i = 0; i < latents.size(); ++i) {
    const double v = std::nearbyint(latents[i]);
    // Values beyond the symbol range are out of every table's support and
    // are priced at the escape cost; avoid the out-of-range cast.
    const int32_t s =
        (std::abs(v) > 2147483000.0) ? INT32_MAX : static_cast<int32_t>(v);
    bits += pmfs[static_cast<size_t>(i)].coded_bits(s);
  }
  return bits;
}

namespace {

/// (objective, |step|, index) lexicographic comparison for argmin.
bool improves(double objective, int index, double best_objective, int best_index) {
  if (objective < best_objective) return true;
  if (objective > best_objective) return false;
  const double a = std::abs(kStepTable[index]);
  const double b = std::abs(kStepTable[best_index]);
  if (a < b) return true;
  if (a > b) return false;
  return index < best_index;
}

}  // namespace

RhoFChoice select_rho_f(const Tensor& y_hat, const Tensor& z_hat, const Tensor& grad_side_bits,
                        const ConditionFn& condition) {
  require_same_shape(z_hat, grad_side_bits, "side latents and their gradient");
  RhoFChoice best;
  bool have_best = false;
  for (int idx = 0; idx < kStepCount; ++idx) {
    Tensor shifted = z_hat;
    axpy(shifted, kStepTable[idx], grad_side_bits);
    Conditioning cond = condition(shifted);
    std::vector<DiscretePmf> pmfs = conditional_pmfs(cond);
    const double bits = coded_bits_total(y_hat, pmfs);
    if (idx == 0) best.baseline_bits = bits;
    if (!have_best || improves(bits, idx, best.coded_bits, best.index)) {
      const double baseline = best.baseline_bits;
      best = RhoFChoice{idx, bits, baseline, std::move(shifted), std::move(cond),
                        std::move(pmfs)};
      have_best = true;
    }
  }
  return best;
}

RhoFChoice select_rho_f(const Tensor& y_hat, const Tensor& z_hat, const CodecModel& model) {
  const Tensor grad = factorized_bits_eval(model.side_prior, z_hat).d_latents;
  return select_rho_f(y_hat, z_hat, grad, [&model](const Tensor& z) {
    return conditioning_split(stack_forward(model.hyper_synthesis, z));
  });
}

RhoHChoice select_rho_h(const Tensor& x, const Tensor& y_hat, const Tensor& grad_main_bits,
                        const SynthesizeFn& synthesize) {
  require_same_shape(y_hat, grad_main_bits, "main latents and their gradient");
  RhoHChoice best;
  bool have_best = false;
  for (int idx = 0; idx < kStepCount; ++idx) {
    Tensor shifted = y_hat;
    axpy(shifted, kStepTable[idx], grad_main_bits);
    Tensor recon = clamp01(synthesize(shifted));
    require_same_shape(recon, x, "shift-candidate reconstruction");
    double se = 0.0;
    for (int64_t i = 0; i < x.size(); ++i) {
      const double d = recon[i] - x[i];
      se += d * d;
    }
    const double mse = 65025.0 * se / static_cast<double>(x.size());
    if (idx == 0) best.baseline_distortion = mse;
    if (!have_best || improves(mse, idx, best.distortion, best.index)) {
      const double baseline = best.baseline_distortion;
      best = RhoHChoice{idx, mse, baseline, std::move(shifted), std::move(recon)};
      have_best = true;
    }
  }
  return best;
}

RhoHChoice select_rho_h(const Tensor& x, const Tensor& y_hat, const Tensor& shifted_z,
                        const CodecModel& model) {
  Conditioning cond = conditioning_split(stack_forward(model.hyper_synthesis, shifted_z));
  const Tensor grad = gaussian_bits_eval(y_hat, cond.mu, cond.sigma).d_latents;
  return select_rho_h(x, y_hat, grad, [&model](const Tensor& y) {
    return stack_forward(model.synthesis, y);
  });
}

}  // namespace gsc
