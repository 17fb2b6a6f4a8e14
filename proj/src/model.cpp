#include "gsc/model.hpp"

#include <cmath>

#include "gsc/errors.hpp"

namespace gsc {

namespace {

constexpr double kLeakSlope = 0.01;

const LayerParams* last_param_layer(const std::vector<LayerParams>& stack) {
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
    if (it->has_params()) return &*it;
  }
  return nullptr;
}

const LayerParams* first_param_layer(const std::vector<LayerParams>& stack) {
  for (const auto& l : stack) {
    if (l.has_params()) return &l;
  }
  return nullptr;
}

void check_chain(const std::vector<LayerParams>& stack, const char* name) {
  int prev_out = -1;
  for (const auto& l : stack) {
    if (!l.has_params()) continue;
    if (prev_out >= 0 && l.in_channels != prev_out) {
      throw DimensionError(std::string(name) + ": layer expects " +
                           std::to_string(l.in_channels) + " channels after a layer producing " +
                           std::to_string(prev_out));
    }
    prev_out = l.out_channels;
  }
  if (prev_out < 0) throw DimensionError(std::string(name) + ": no parameterized layers");
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

int CodecModel::main_channels() const {
  const LayerParams* l = last_param_layer(analysis);
  return l ? l->out_channels : 0;
}

int CodecModel::side_channels() const {
  const LayerParams* l = last_param_layer(hyper_analysis);
  return l ? l->out_channels : 0;
}

void CodecModel::validate() const {
  check_chain(analysis, "analysis");
  check_chain(synthesis, "synthesis");
  check_chain(hyper_analysis, "hyper_analysis");
  check_chain(hyper_synthesis, "hyper_synthesis");

  const int o = main_channels();
  const int f = side_channels();
  if (first_param_layer(analysis)->in_channels != 3 ||
      last_param_layer(synthesis)->out_channels != 3) {
    throw DimensionError("model: image ends of the transform pair must be 3-channel");
  }
  if (first_param_layer(synthesis)->in_channels != o) {
    throw DimensionError("model: synthesis input does not match main channels");
  }
  if (first_param_layer(hyper_analysis)->in_channels != o) {
    throw DimensionError("model: hyper_analysis input does not match main channels");
  }
  if (first_param_layer(hyper_synthesis)->in_channels != f) {
    throw DimensionError("model: hyper_synthesis input does not match side channels");
  }
  if (last_param_layer(hyper_synthesis)->out_channels != 2 * o) {
    throw DimensionError("model: conditioning head must produce 2x main channels");
  }
  if (side_prior.channels() != f) {
    throw DimensionError("model: side prior channel count does not match side latents");
  }
  if (!(lambda > 0.0)) throw ConfigError("model: lambda must be positive");
  if (lambda_index < 0 || lambda_index >= kLambdaCount) {
    throw ConfigError("model: lambda index out of range");
  }
}

CodecModel make_codec_model(double lambda, int lambda_index, Rng& rng) {
  CodecModel m;
  const int o = 64;  // main latent channels
  const int f = 32;  // side latent channels

  m.analysis.push_back(LayerParams::conv(3, 32, 4, 2, 1));
  m.analysis.push_back(LayerParams::activation(kLeakSlope));
  m.analysis.push_back(LayerParams::conv(32, 64, 4, 2, 1));
  m.analysis.push_back(LayerParams::activation(kLeakSlope));
  m.analysis.push_back(LayerParams::conv(64, o, 4, 2, 1));

  m.synthesis.push_back(LayerParams::transposed_conv(o, 64, 4, 2, 1));
  m.synthesis.push_back(LayerParams::activation(kLeakSlope));
  m.synthesis.push_back(LayerParams::transposed_conv(64, 32, 4, 2, 1));
  m.synthesis.push_back(LayerParams::activation(kLeakSlope));
  m.synthesis.push_back(LayerParams::transposed_conv(32, 3, 4, 2, 1));

  m.hyper_analysis.push_back(LayerParams::conv(o, 32, 4, 2, 1));
  m.hyper_analysis.push_back(LayerParams::activation(kLeakSlope));
  m.hyper_analysis.push_back(LayerParams::conv(32, f, 4, 2, 1));

  m.hyper_synthesis.push_back(LayerParams::transposed_conv(f, 64, 4, 2, 1));
  m.hyper_synthesis.push_back(LayerParams::activation(kLeakSlope));
  m.hyper_synthesis.push_back(LayerParams::transposed_conv(64, 2 * o, 4, 2, 1));

  for (auto* stack : {&m.analysis, &m.synthesis, &m.hyper_analysis, &m.hyper_synthesis}) {
    for (auto& layer : *stack) layer.init_random(rng);
  }

  m.side_prior = FactorizedModel(f);  // location 0, unit scale
  m.lambda = lambda;
  m.lambda_index = lambda_index;
  m.validate();
  return m;
}

std::vector<ParamRef> model_parameters(CodecModel& model) {
  std::vector<ParamRef> out;
  auto add_stack = [&](const char* name, std::vector<LayerParams>& stack) {
    for (size_t i = 0; i < stack.size(); ++i) {
      if (!stack[i].has_params()) continue;
      const std::string base = std::string(name) + "." + std::to_string(i);
      out.push_back({base + ".weights", &stack[i].weights});
      out.push_back({base + ".bias", &stack[i].bias});
    }
  };
  add_stack("analysis", model.analysis);
  add_stack("synthesis", model.synthesis);
  add_stack("hyper_analysis", model.hyper_analysis);
  add_stack("hyper_synthesis", model.hyper_synthesis);
  out.push_back({"side_prior.loc", &model.side_prior.loc});
  out.push_back({"side_prior.log_scale", &model.side_prior.log_scale});
  return out;
}

Tensor stack_forward(const std::vector<LayerParams>& stack, const Tensor& x) {
  Tensor cur = x;
  for (const auto& layer : stack) cur = layer_forward(cur, layer);
  return cur;
}

StackTrace stack_forward_traced(const std::vector<LayerParams>& stack, const Tensor& x) {
  StackTrace tr;
  tr.inputs.reserve(stack.size());
  Tensor cur = x;
  for (const auto& layer : stack) {
    tr.inputs.push_back(cur);
    cur = layer_forward(cur, layer);
  }
  tr.output = std::move(cur);
  return tr;
}

StackGrads stack_backward(const std::vector<LayerParams>& stack, const StackTrace& trace,
                          const Tensor& upstream) {
  if (trace.inputs.size() != stack.size()) {
    throw DimensionError("stack_backward: trace does not match stack");
  }
  StackGrads out;
  out.layers.resize(stack.size());
  Tensor cur = upstream;
  for (size_t i = stack.size(); i-- > 0;) {
    out.layers[i] = layer_backward(trace.inputs[i], stack[i], cur);
    cur = out.layers[i].input;
  }
  out.input = std::move(cur);
  return out;
}

Tensor stack_input_grad(const std::vector<LayerParams>& stack, const StackTrace& trace,
                        const Tensor& upstream) {
  if (trace.inputs.size() != stack.size()) {
    throw DimensionError("stack_input_grad: trace does not match stack");
  }
  Tensor cur = upstream;
  for (size_t i = stack.size(); i-- > 0;) {
    cur = layer_backward(trace.inputs[i], stack[i], cur).input;
  }
  return cur;
}

Conditioning conditioning_split(const Tensor& hyper_out) {
  if (hyper_out.rank() != 3 || hyper_out.dim(2) % 2 != 0) {
    throw DimensionError("conditioning: expected even channel count, got " +
                         hyper_out.shape_str());
  }
  const int h = hyper_out.dim(0), w = hyper_out.dim(1), o = hyper_out.dim(2) / 2;
  Conditioning c{Tensor({h, w, o}), Tensor({h, w, o})};
  const double* src = hyper_out.data();
  double* mu = c.mu.data();
  double* sg = c.sigma.data();
  const int64_t sites = static_cast<int64_t>(h) * w;
  for (int64_t s = 0; s < sites; ++s) {
    for (int ch = 0; ch < o; ++ch) {
      mu[s * o + ch] = src[s * 2 * o + ch];
      sg[s * o + ch] = kSigmaMin + softplus(src[s * 2 * o + o + ch]);
    }
  }
  return c;
}

Tensor conditioning_merge_grads(const Tensor& hyper_out, const Tensor& d_mu,
                                const Tensor& d_sigma) {
  const int h = hyper_out.dim(0), w = hyper_out.dim(1), o = hyper_out.dim(2) / 2;
  require_same_shape(d_mu, d_sigma, "conditioning grads");
  if (d_mu.dim(2) != o || d_mu.dim(0) != h || d_mu.dim(1) != w) {
    throw DimensionError("conditioning grads do not match hyper output");
  }
  Tensor out = Tensor::zeros_like(hyper_out);
  const double* src = hyper_out.data();
  const double* dm = d_mu.data();
  const double* ds = d_sigma.data();
  double* dst = out.data();
  const int64_t sites = static_cast<int64_t>(h) * w;
  for (int64_t s = 0; s < sites; ++s) {
    for (int ch = 0; ch < o; ++ch) {
      dst[s * 2 * o + ch] = dm[s * o + ch];
      dst[s * 2 * o + o + ch] = ds[s * o + ch] * sigmoid(src[s * 2 * o + o + ch]);
    }
  }
  return out;
}

Tensor quantize_round(const Tensor& t) {
  Tensor out = t;
  double* d = out.data();
  for (int64_t i = 0; i < out.size(); ++i) d[i] = std::nearbyint(d[i]);
  return out;
}

bool is_integer_valued(const Tensor& t) {
  for (int64_t i = 0; i < t.size(); ++i) {
    if (t[i] != std::nearbyint(t[i])) return false;
  }
  return true;
}

Tensor quantize_noise(const Tensor& t, Rng& rng) {
  Tensor out = t;
  double* d = out.data();
  for (int64_t i = 0; i < out.size(); ++i) d[i] += rng.uniform() - 0.5;
  return out;
}

LossBreakdown codec_loss(const CodecModel& model, const Tensor& x, QuantizeMode mode,
                         Rng* noise_rng, LossGrads* grads) {
  if (x.rank() != 3 || x.dim(2) != 3) {
    throw DataError("codec_loss: expected (h,w,3) image, got " + x.shape_str());
  }
  if (x.dim(0) % kDownsample != 0 || x.dim(1) % kDownsample != 0) {
    throw DataError("codec_loss: image dims must be multiples of " +
                    std::to_string(kDownsample) + ", got " + x.shape_str());
  }
  if (mode == QuantizeMode::kNoise && noise_rng == nullptr) {
    throw ConfigError("codec_loss: noise mode requires a generator");
  }

  const double npix = static_cast<double>(x.dim(0)) * x.dim(1);

  StackTrace ta = stack_forward_traced(model.analysis, x);
  const Tensor& y = ta.output;
  StackTrace th = stack_forward_traced(model.hyper_analysis, y);
  const Tensor& z = th.output;

  Tensor y_q = (mode == QuantizeMode::kRound) ? quantize_round(y)
                                              : quantize_noise(y, *noise_rng);
  Tensor z_q = (mode == QuantizeMode::kRound) ? quantize_round(z)
                                              : quantize_noise(z, *noise_rng);

  StackTrace ts = stack_forward_traced(model.hyper_synthesis, z_q);
  Conditioning cond = conditioning_split(ts.output);
  GaussianEval main_ev = gaussian_bits_eval(y_q, cond.mu, cond.sigma);
  FactorizedEval side_ev = factorized_bits_eval(model.side_prior, z_q);

  StackTrace tg = stack_forward_traced(model.synthesis, y_q);
  const Tensor& xhat = tg.output;
  require_same_shape(xhat, x, "codec_loss reconstruction");

  double se = 0.0;
  const double* xr = x.data();
  const double* hr = xhat.data();
  for (int64_t i = 0; i < x.size(); ++i) {
    const double d = hr[i] - xr[i];
    se += d * d;
  }
  const double mse = 65025.0 * se / static_cast<double>(x.size());

  LossBreakdown out;
  out.main_bits = main_ev.bits / npix;
  out.side_bits = side_ev.bits / npix;
  out.distortion = mse;
  out.clamped = main_ev.clamped + side_ev.clamped;
  out.total = out.main_bits + out.side_bits + model.lambda * out.distortion;

  if (!std::isfinite(out.main_bits)) throw TrainError("codec_loss: main rate non-finite");
  if (!std::isfinite(out.side_bits)) throw TrainError("codec_loss: side rate non-finite");
  if (!std::isfinite(out.distortion)) throw TrainError("codec_loss: distortion non-finite");

  if (grads == nullptr) return out;

  // Reconstruction error term: d(lambda * 65025/N * sum((xhat-x)^2))/dxhat.
  Tensor d_xhat = Tensor::zeros_like(xhat);
  const double mse_scale = model.lambda * 65025.0 * 2.0 / static_cast<double>(x.size());
  for (int64_t i = 0; i < x.size(); ++i) d_xhat[i] = mse_scale * (hr[i] - xr[i]);

  StackGrads gs = stack_backward(model.synthesis, tg, d_xhat);

  // Main-rate term w.r.t. quantized main latents (noise proxy passes the
  // gradient through unchanged) and w.r.t. the conditioning grids.
  Tensor d_yq = gs.input;
  axpy(d_yq, 1.0 / npix, main_ev.d_latents);

  Tensor d_cond = conditioning_merge_grads(ts.output, scaled(main_ev.d_mu, 1.0 / npix),
                                           scaled(main_ev.d_sigma, 1.0 / npix));
  StackGrads hs = stack_backward(model.hyper_synthesis, ts, d_cond);

  Tensor d_zq = hs.input;
  axpy(d_zq, 1.0 / npix, side_ev.d_latents);

  StackGrads ha = stack_backward(model.hyper_analysis, th, d_zq);

  Tensor d_y = d_yq;
  axpy(d_y, 1.0, ha.input);
  StackGrads ga = stack_backward(model.analysis, ta, d_y);

  grads->analysis = std::move(ga.layers);
  grads->synthesis = std::move(gs.layers);
  grads->hyper_analysis = std::move(ha.layers);
  grads->hyper_synthesis = std::move(hs.layers);
  grads->d_loc = scaled(side_ev.d_loc, 1.0 / npix);
  grads->d_log_scale = scaled(side_ev.d_log_scale, 1.0 / npix);
  return out;
}

std::vector<Tensor*> loss_grad_tensors(const CodecModel& model, LossGrads& grads) {
  std::vector<Tensor*> out;
  auto add = [&](const std::vector<LayerParams>& stack, std::vector<LayerGrads>& gs) {
    if (gs.size() != stack.size()) {
      throw DimensionError("loss_grad_tensors: gradients do not match model stacks");
    }
    for (size_t i = 0; i < stack.size(); ++i) {
      if (!stack[i].has_params()) continue;
      out.push_back(&gs[i].weights);
      out.push_back(&gs[i].bias);
    }
  };
  add(model.analysis, grads.analysis);
  add(model.synthesis, grads.synthesis);
  add(model.hyper_analysis, grads.hyper_analysis);
  add(model.hyper_synthesis, grads.hyper_synthesis);
  out.push_back(&grads.d_loc);
  out.push_back(&grads.d_log_scale);
  return out;
}

Tensor grad_main_bits_wrt_side(const CodecModel& model, const Tensor& y_hat,
                               const Tensor& z_hat) {
  StackTrace ts = stack_forward_traced(model.hyper_synthesis, z_hat);
  Conditioning cond = conditioning_split(ts.output);
  GaussianEval ev = gaussian_bits_eval(y_hat, cond.mu, cond.sigma);
  Tensor d_cond = conditioning_merge_grads(ts.output, ev.d_mu, ev.d_sigma);
  return stack_input_grad(model.hyper_synthesis, ts, d_cond);
}

}  // namespace gsc
