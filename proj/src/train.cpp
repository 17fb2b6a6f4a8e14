#include "gsc/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gsc/adam.hpp"
#include "gsc/errors.hpp"

namespace gsc {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train config: learning rate must be positive");
  }
  if (!(final_lr_scale > 0.0) || final_lr_scale > 1.0) {
    throw ConfigError("train config: final lr scale must be in (0, 1]");
  }
  if (batch_size <= 0) throw ConfigError("train config: batch size must be positive");
  if (iterations <= 0) throw ConfigError("train config: iteration count must be positive");
  if (lambda_indices.empty()) throw ConfigError("train config: lambda list is empty");
  for (int idx : lambda_indices) {
    if (idx < 0 || idx >= kLambdaCount) {
      throw ConfigError("train config: lambda index " + std::to_string(idx) + " out of range");
    }
  }
}

TrainResult train_single(const TrainConfig& cfg, const std::vector<Tensor>& dataset,
                         int lambda_index) {
  cfg.validate();
  if (lambda_index < 0 || lambda_index >= kLambdaCount) {
    throw ConfigError("train: lambda index out of range");
  }
  if (dataset.empty()) throw DataError("train: dataset is empty");
  for (const Tensor& img : dataset) {
    if (img.rank() != 3 || img.dim(2) != 3 || img.dim(0) % kDownsample != 0 ||
        img.dim(1) % kDownsample != 0) {
      throw DataError("train: dataset image has unusable shape " + img.shape_str());
    }
  }

  Rng root(cfg.seed);
  Rng init_rng = root.split(1);
  Rng noise_rng = root.split(2);
  Rng order_rng = root.split(3);

  TrainResult result{make_codec_model(kLambdaGrid[lambda_index], lambda_index, init_rng), {}};
  CodecModel& model = result.model;
  result.trajectory.reserve(static_cast<size_t>(cfg.iterations));

  std::vector<ParamRef> params = model_parameters(model);
  std::vector<AdamState> opt(params.size());

  std::vector<Tensor> accum;
  accum.reserve(params.size());
  for (const ParamRef& p : params) accum.push_back(Tensor::zeros_like(*p.tensor));

  for (int it = 0; it < cfg.iterations; ++it) {
    try {
      for (Tensor& a : accum) a.fill(0.0);
      double batch_total = 0.0;
      for (int b = 0; b < cfg.batch_size; ++b) {
        const size_t idx = order_rng.uniform_index(dataset.size());
        LossGrads g;
        LossBreakdown lb = codec_loss(model, dataset[idx], QuantizeMode::kNoise, &noise_rng, &g);
        batch_total += lb.total;
        std::vector<Tensor*> flat = loss_grad_tensors(model, g);
        for (size_t p = 0; p < flat.size(); ++p) axpy(accum[p], 1.0, *flat[p]);
      }
      const double inv_batch = 1.0 / cfg.batch_size;
      result.trajectory.push_back(batch_total * inv_batch);
      const double progress =
          (cfg.iterations > 1) ? static_cast<double>(it) / (cfg.iterations - 1) : 0.0;
      const double lr =
          cfg.learning_rate * (1.0 - progress * (1.0 - cfg.final_lr_scale));
      for (size_t p = 0; p < params.size(); ++p) {
        if (inv_batch != 1.0) {
          for (int64_t i = 0; i < accum[p].size(); ++i) accum[p][i] *= inv_batch;
        }
        adam_step(*params[p].tensor, accum[p], opt[p], lr, AdamConfig{}, params[p].name.c_str());
      }
    } catch (const TrainError& e) {
      throw TrainError(std::string(e.what()) + " (iteration " + std::to_string(it) + ")");
    }
  }
  return result;
}

std::vector<double> smoothed_trajectory(const std::vector<double>& values, int window) {
  if (window <= 0) throw ConfigError("smoothed_trajectory: window must be positive");
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    acc += values[i];
    if (i >= static_cast<size_t>(window)) acc -= values[i - window];
    const size_t n = std::min(i + 1, static_cast<size_t>(window));
    out[i] = acc / static_cast<double>(n);
  }
  return out;
}

namespace {

struct LatentForward {
  StackTrace hyper;      // hyper-synthesis trace from z_lat
  Conditioning cond;
  GaussianEval main_ev;
  FactorizedEval side_ev;
  StackTrace synth;      // synthesis trace from y_lat
  double se = 0.0;       // summed squared reconstruction error
};

LatentForward latent_forward(const CodecModel& model, const Tensor& x, const Tensor& y_lat,
                             const Tensor& z_lat) {
  LatentForward f;
  f.hyper = stack_forward_traced(model.hyper_synthesis, z_lat);
  f.cond = conditioning_split(f.hyper.output);
  f.main_ev = gaussian_bits_eval(y_lat, f.cond.mu, f.cond.sigma);
  f.side_ev = factorized_bits_eval(model.side_prior, z_lat);
  f.synth = stack_forward_traced(model.synthesis, y_lat);
  require_same_shape(f.synth.output, x, "latent objective reconstruction");
  const double* xr = x.data();
  const double* hr = f.synth.output.data();
  for (int64_t i = 0; i < x.size(); ++i) {
    const double d = hr[i] - xr[i];
    f.se += d * d;
  }
  return f;
}

LossBreakdown latent_breakdown(const CodecModel& model, const Tensor& x, const LatentForward& f) {
  const double npix = static_cast<double>(x.dim(0)) * x.dim(1);
  LossBreakdown out;
  out.main_bits = f.main_ev.bits / npix;
  out.side_bits = f.side_ev.bits / npix;
  out.distortion = 65025.0 * f.se / static_cast<double>(x.size());
  out.clamped = f.main_ev.clamped + f.side_ev.clamped;
  out.total = out.main_bits + out.side_bits + model.lambda * out.distortion;
  return out;
}

}  // namespace

LossBreakdown latent_rd_loss(const CodecModel& model, const Tensor& x, const Tensor& y_lat,
                             const Tensor& z_lat) {
  LatentForward f = latent_forward(model, x, y_lat, z_lat);
  return latent_breakdown(model, x, f);
}

LatentGrads latent_rd_grad(const CodecModel& model, const Tensor& x, const Tensor& y_lat,
                           const Tensor& z_lat) {
  LatentForward f = latent_forward(model, x, y_lat, z_lat);
  const double npix = static_cast<double>(x.dim(0)) * x.dim(1);

  LatentGrads out;
  out.loss = latent_breakdown(model, x, f);

  Tensor d_xhat = Tensor::zeros_like(f.synth.output);
  const double mse_scale = model.lambda * 65025.0 * 2.0 / static_cast<double>(x.size());
  const double* xr = x.data();
  const double* hr = f.synth.output.data();
  for (int64_t i = 0; i < x.size(); ++i) d_xhat[i] = mse_scale * (hr[i] - xr[i]);

  out.d_y = stack_input_grad(model.synthesis, f.synth, d_xhat);
  axpy(out.d_y, 1.0 / npix, f.main_ev.d_latents);

  Tensor d_cond = conditioning_merge_grads(f.hyper.output, scaled(f.main_ev.d_mu, 1.0 / npix),
                                           scaled(f.main_ev.d_sigma, 1.0 / npix));
  out.d_z = stack_input_grad(model.hyper_synthesis, f.hyper, d_cond);
  axpy(out.d_z, 1.0 / npix, f.side_ev.d_latents);
  return out;
}

FinetuneResult finetune_latents(const CodecModel& model, const Tensor& x, int iterations,
                                uint64_t seed) {
  model.validate();
  if (iterations < 0) throw ConfigError("finetune: iteration count must be non-negative");

  Tensor y = stack_forward(model.analysis, x);
  Tensor z = stack_forward(model.hyper_analysis, y);

  FinetuneResult res;
  res.latents.y = quantize_round(y);
  res.latents.z = quantize_round(z);
  res.latents.state = LatentState::kRounded;
  res.baseline_loss = latent_rd_loss(model, x, res.latents.y, res.latents.z).total;
  res.loss = res.baseline_loss;
  if (iterations == 0) return res;

  Rng noise(seed);
  double lr = 0.01;
  constexpr double kLrMax = 0.5;
  constexpr double kLrMin = 1e-7;
  res.trajectory.reserve(static_cast<size_t>(iterations));

  for (int it = 0; it < iterations; ++it) {
    Tensor y_noisy = quantize_noise(y, noise);
    Tensor z_noisy = quantize_noise(z, noise);
    LatentGrads g = latent_rd_grad(model, x, y_noisy, z_noisy);
    if (!g.d_y.all_finite() || !g.d_z.all_finite() || !std::isfinite(g.loss.total)) {
      res.diverged = true;
      return res;  // safeguarded: baseline (or best-so-far) latents stand
    }

    Tensor y_try = y;
    Tensor z_try = z;
    axpy(y_try, -lr, g.d_y);
    axpy(z_try, -lr, g.d_z);

    Tensor y_round = quantize_round(y_try);
    Tensor z_round = quantize_round(z_try);
    const double trial = latent_rd_loss(model, x, y_round, z_round).total;
    if (std::isfinite(trial) && trial <= res.loss) {
      y = std::move(y_try);
      z = std::move(z_try);
      res.latents.y = std::move(y_round);
      res.latents.z = std::move(z_round);
      res.loss = trial;
      lr = std::min(lr * 1.1, kLrMax);
    } else {
      lr = std::max(lr * 0.5, kLrMin);
    }
    res.trajectory.push_back(res.loss);
  }
  return res;
}

}  // namespace gsc
