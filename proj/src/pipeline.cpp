#include "gsc/pipeline.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "gsc/errors.hpp"
#include "gsc/image.hpp"
#include "gsc/metrics.hpp"
#include "gsc/range_coder.hpp"

namespace gsc {

namespace {

void check_image(const Tensor& x) {
  if (x.rank() != 3 || x.dim(2) != 3) {
    throw DataError("encode: expected (h,w,3) image, got " + x.shape_str());
  }
  if (x.dim(0) % kDownsample != 0 || x.dim(1) % kDownsample != 0) {
    throw DataError("encode: image dims must be multiples of " + std::to_string(kDownsample) +
                    ", got " + x.shape_str());
  }
}

std::vector<int32_t> to_symbols(const Tensor& t) {
  std::vector<int32_t> out(static_cast<size_t>(t.size()));
  for (int64_t i = 0; i < t.size(); ++i) {
    const double v = t[i];
    if (v != std::nearbyint(v)) {
      throw CoderError("coding: latent grid contains a non-integer value");
    }
    if (std::abs(v) > 1e9) {
      throw CoderError("coding: latent symbol magnitude out of range");
    }
    out[static_cast<size_t>(i)] = static_cast<int32_t>(v);
  }
  return out;
}

Tensor from_symbols(const std::vector<int>& shape, const std::vector<int32_t>& syms) {
  Tensor t(shape);
  if (static_cast<size_t>(t.size()) != syms.size()) {
    throw DimensionError("decoding: symbol count does not match latent grid");
  }
  for (int64_t i = 0; i < t.size(); ++i) t[i] = syms[static_cast<size_t>(i)];
  return t;
}

void check_latent_shapes(const CodecModel& model, int height, int width, const Tensor& y_hat,
                         const Tensor& z_hat) {
  const std::vector<int> y_shape = {height / kMainDownsample, width / kMainDownsample,
                                    model.main_channels()};
  const std::vector<int> z_shape = {height / kDownsample, width / kDownsample,
                                    model.side_channels()};
  if (y_hat.shape() != y_shape || z_hat.shape() != z_shape) {
    throw DimensionError("encode: latent grids do not match the image geometry: main " +
                         y_hat.shape_str() + ", side " + z_hat.shape_str());
  }
}

EncodeResult encode_core(const CodecModel& model, const Tensor& x, bool shift_enabled,
                         const Tensor& y_hat, const Tensor& z_hat, PassCounters counters) {
  const int h = x.dim(0), w = x.dim(1);
  check_latent_shapes(model, h, w, y_hat, z_hat);

  EncodeResult res;
  res.stream.width = w;
  res.stream.height = h;
  res.stream.lambda_index = model.lambda_index;

  // Side codes go on the wire unshifted, so these bytes are the same with
  // and without shifting.
  std::vector<DiscretePmf> side_tables = side_pmfs(model.side_prior, z_hat.shape());
  res.stream.side_payload = encode_symbols(to_symbols(z_hat), side_tables);
  FactorizedEval side_ev = factorized_bits_eval(model.side_prior, z_hat);
  res.side_bits_estimate = side_ev.bits;

  // Reference passes: step-0 conditioning/coding cost and reconstruction.
  counters.h_s += 1;
  Conditioning cond0 = conditioning_split(stack_forward(model.hyper_synthesis, z_hat));
  std::vector<DiscretePmf> pmfs0 = conditional_pmfs(cond0);
  res.baseline_main_coded_bits = coded_bits_total(y_hat, pmfs0);
  counters.g_s += 1;
  Tensor recon0 = clamp01(stack_forward(model.synthesis, y_hat));
  res.baseline_distortion = mse255(recon0, x);

  const std::vector<int32_t> y_syms = to_symbols(y_hat);

  if (!shift_enabled) {
    res.stream.main_payload = encode_symbols(y_syms, pmfs0);
    res.main_coded_bits = res.baseline_main_coded_bits;
    res.main_bits_estimate = gaussian_bits_eval(y_hat, cond0.mu, cond0.sigma).bits;
    res.reconstruction = std::move(recon0);
    res.distortion = res.baseline_distortion;
  } else {
    counters.grad_evals += 1;  // side entropy gradient drives the z search
    RhoFChoice rf =
        select_rho_f(y_hat, z_hat, side_ev.d_latents, [&](const Tensor& shifted) {
          counters.h_s += 1;
          return conditioning_split(stack_forward(model.hyper_synthesis, shifted));
        });
    res.stream.rho_f_index = rf.index;
    res.stream.main_payload = encode_symbols(y_syms, rf.pmfs);
    res.main_coded_bits = rf.coded_bits;

    counters.grad_evals += 1;  // main entropy gradient drives the y search
    GaussianEval main_ev = gaussian_bits_eval(y_hat, rf.cond.mu, rf.cond.sigma);
    res.main_bits_estimate = main_ev.bits;
    RhoHChoice rh = select_rho_h(x, y_hat, main_ev.d_latents, [&](const Tensor& shifted) {
      counters.g_s += 1;
      return stack_forward(model.synthesis, shifted);
    });
    res.stream.rho_h_index = rh.index;
    res.reconstruction = std::move(rh.reconstruction);
    res.distortion = rh.distortion;

    res.decision.rho_f_index = rf.index;
    res.decision.rho_h_index = rh.index;
    res.decision.main_bits_delta = rf.coded_bits - rf.baseline_bits;
    res.decision.distortion_delta = rh.distortion - rh.baseline_distortion;
  }

  res.bytes = serialize_bitstream(res.stream);
  res.counters = counters;
  return res;
}

DecodeResult decode_core(const CodecModel& model, Bitstream bs) {
  model.validate();
  if (bs.lambda_index != model.lambda_index) {
    throw DataError("decode: stream was coded at trade-off index " +
                    std::to_string(bs.lambda_index) + ", model is index " +
                    std::to_string(model.lambda_index));
  }
  if (bs.width <= 0 || bs.height <= 0 || bs.width % kDownsample != 0 ||
      bs.height % kDownsample != 0) {
    throw DataError("decode: image dims are not multiples of " + std::to_string(kDownsample));
  }
  if (bs.rho_f_index < 0 || bs.rho_f_index >= kStepCount || bs.rho_h_index < 0 ||
      bs.rho_h_index >= kStepCount) {
    throw FormatError("decode: shift index out of range");
  }

  DecodeResult res;
  PassCounters& c = res.counters;

  const std::vector<int> z_shape = {bs.height / kDownsample, bs.width / kDownsample,
                                    model.side_channels()};
  std::vector<DiscretePmf> side_tables = side_pmfs(model.side_prior, z_shape);
  Tensor z_hat = from_symbols(z_shape, decode_symbols(bs.side_payload, side_tables));

  Tensor z_dec = z_hat;
  if (bs.rho_f_index != 0) {
    c.grad_evals += 1;
    FactorizedEval side_ev = factorized_bits_eval(model.side_prior, z_hat);
    axpy(z_dec, kStepTable[bs.rho_f_index], side_ev.d_latents);
  }

  c.h_s += 1;
  Conditioning cond = conditioning_split(stack_forward(model.hyper_synthesis, z_dec));
  std::vector<DiscretePmf> pmfs = conditional_pmfs(cond);
  const std::vector<int> y_shape = {bs.height / kMainDownsample, bs.width / kMainDownsample,
                                    model.main_channels()};
  Tensor y_hat = from_symbols(y_shape, decode_symbols(bs.main_payload, pmfs));

  Tensor y_dec = y_hat;
  if (bs.rho_h_index != 0) {
    c.grad_evals += 1;
    GaussianEval main_ev = gaussian_bits_eval(y_hat, cond.mu, cond.sigma);
    axpy(y_dec, kStepTable[bs.rho_h_index], main_ev.d_latents);
  }

  c.g_s += 1;
  res.reconstruction = clamp01(stack_forward(model.synthesis, y_dec));
  res.stream = std::move(bs);
  return res;
}

}  // namespace

std::vector<DiscretePmf> side_pmfs(const FactorizedModel& prior, const std::vector<int>& shape) {
  if (shape.size() != 3 || shape[2] != prior.channels()) {
    throw DimensionError("side tables: latent grid channels do not match the prior");
  }
  const int channels = shape[2];
  std::vector<DiscretePmf> per_channel;
  per_channel.reserve(static_cast<size_t>(channels));
  for (int ch = 0; ch < channels; ++ch) {
    per_channel.push_back(discretize_logistic(prior.loc[ch], prior.log_scale[ch]));
  }
  const int64_t count = Tensor::count(shape);
  std::vector<DiscretePmf> out;
  out.reserve(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    out.push_back(per_channel[static_cast<size_t>(i % channels)]);
  }
  return out;
}

EncodeResult encode_image(const CodecModel& model, const Tensor& x, bool shift_enabled) {
  model.validate();
  check_image(x);
  PassCounters counters;
  counters.g_a += 1;
  Tensor y = stack_forward(model.analysis, x);
  counters.h_a += 1;
  Tensor z = stack_forward(model.hyper_analysis, y);
  return encode_core(model, x, shift_enabled, quantize_round(y), quantize_round(z), counters);
}

EncodeResult encode_with_latents(const CodecModel& model, const Tensor& x, bool shift_enabled,
                                 const LatentPair& latents) {
  model.validate();
  check_image(x);
  if (latents.state != LatentState::kRounded || !is_integer_valued(latents.y) ||
      !is_integer_valued(latents.z)) {
    throw DataError("encode: supplied latents must be rounded (integer-valued)");
  }
  return encode_core(model, x, shift_enabled, latents.y, latents.z, PassCounters{});
}

DecodeResult decode_image(const CodecModel& model, std::span<const uint8_t> bytes) {
  return decode_core(model, parse_bitstream(bytes));
}

Tensor apply_shift_decoder_side(const Bitstream& stream, const CodecModel& model) {
  return decode_core(model, stream).reconstruction;
}

}  // namespace gsc
