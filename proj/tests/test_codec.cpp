#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "gsc/bytes.hpp"
#include "gsc/errors.hpp"
#include "gsc/image.hpp"
#include "gsc/model.hpp"
#include "test_util.hpp"

using namespace gsc;
using gsc::test::rel_err;

namespace {

// Gradient tensors in the same fixed order as model_parameters().
std::vector<const Tensor*> grad_refs(const CodecModel& model, const LossGrads& g) {
  std::vector<const Tensor*> out;
  auto add = [&](const std::vector<LayerParams>& stack, const std::vector<LayerGrads>& gs) {
    for (size_t i = 0; i < stack.size(); ++i) {
      if (!stack[i].has_params()) continue;
      out.push_back(&gs[i].weights);
      out.push_back(&gs[i].bias);
    }
  };
  add(model.analysis, g.analysis);
  add(model.synthesis, g.synthesis);
  add(model.hyper_analysis, g.hyper_analysis);
  add(model.hyper_synthesis, g.hyper_synthesis);
  out.push_back(&g.d_loc);
  out.push_back(&g.d_log_scale);
  return out;
}

double noise_loss(const CodecModel& model, const Tensor& x, uint64_t seed) {
  Rng noise(seed);
  return codec_loss(model, x, QuantizeMode::kNoise, &noise, nullptr).total;
}

}  // namespace

TEST_CASE("rounding quantizer uses ties-to-even") {
  Tensor t({9});
  const double in[] = {0.5, 1.5, 2.5, -0.5, -1.5, -2.5, 3.49, 3.51, -0.49};
  const double want[] = {0.0, 2.0, 2.0, 0.0, -2.0, -2.0, 3.0, 4.0, 0.0};
  for (int i = 0; i < 9; ++i) t[i] = in[i];
  Tensor q = quantize_round(t);
  for (int i = 0; i < 9; ++i) CHECK(q[i] == want[i]);
}

TEST_CASE("noise quantizer perturbs by at most half a step") {
  Rng rng(31);
  Tensor t = Tensor::random_uniform({40, 17}, -4.0, 4.0, rng);
  Rng noise(77);
  Tensor q = quantize_noise(t, noise);
  double mean_shift = 0.0;
  for (int64_t i = 0; i < t.size(); ++i) {
    const double d = q[i] - t[i];
    CHECK(d >= -0.5);
    CHECK(d < 0.5);
    mean_shift += d;
  }
  CHECK(std::abs(mean_shift / static_cast<double>(t.size())) < 0.05);
}

TEST_CASE("model construction matches the documented architecture") {
  Rng rng(5);
  CodecModel m = make_codec_model(0.01, 1, rng);
  CHECK(m.main_channels() == 64);
  CHECK(m.side_channels() == 32);
  CHECK(m.lambda == doctest::Approx(0.01));
  CHECK(m.lambda_index == 1);

  int64_t params = 0;
  for (const ParamRef& p : model_parameters(m)) params += p.tensor->size();
  CHECK(params == 413251);

  Tensor x = synth_image(64, 64, rng);
  Tensor y = stack_forward(m.analysis, x);
  CHECK(y.shape() == std::vector<int>{8, 8, 64});
  Tensor z = stack_forward(m.hyper_analysis, y);
  CHECK(z.shape() == std::vector<int>{2, 2, 32});
  Tensor cond_raw = stack_forward(m.hyper_synthesis, z);
  CHECK(cond_raw.shape() == std::vector<int>{8, 8, 128});
  CHECK(64 / kDownsample == z.dim(0));
  Tensor recon = stack_forward(m.synthesis, y);
  CHECK(recon.shape() == std::vector<int>{64, 64, 3});

  Conditioning c = conditioning_split(cond_raw);
  CHECK(c.mu.shape() == y.shape());
  CHECK(c.sigma.shape() == y.shape());
  for (int64_t i = 0; i < c.sigma.size(); ++i) CHECK(c.sigma[i] > kSigmaMin - 1e-15);
}

TEST_CASE("model validation rejects inconsistent wiring") {
  Rng rng(6);
  CodecModel m = make_codec_model(0.01, 1, rng);
  CHECK_NOTHROW(m.validate());

  CodecModel bad = m;
  bad.analysis[2] = LayerParams::conv(64, 48, 4, 2, 1);
  bad.analysis[2].init_random(rng);
  CHECK_THROWS_AS(bad.validate(), DimensionError);

  bad = m;
  bad.side_prior = FactorizedModel(16);
  CHECK_THROWS_AS(bad.validate(), DimensionError);

  bad = m;
  bad.lambda = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = m;
  bad.lambda_index = 9;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("conditioning split and merge agree with finite differences") {
  Rng rng(91);
  Tensor raw = Tensor::random_uniform({3, 2, 10}, -3.0, 3.0, rng);
  Tensor w_mu = Tensor::random_uniform({3, 2, 5}, -1.0, 1.0, rng);
  Tensor w_sigma = Tensor::random_uniform({3, 2, 5}, -1.0, 1.0, rng);

  auto objective = [&](const Tensor& r) {
    Conditioning c = conditioning_split(r);
    return dot(w_mu, c.mu) + dot(w_sigma, c.sigma);
  };
  Tensor grad = conditioning_merge_grads(raw, w_mu, w_sigma);
  for (int64_t i = 0; i < raw.size(); ++i) {
    Tensor up = raw, dn = raw;
    const double h = 1e-6;
    up[i] += h;
    dn[i] -= h;
    const double fd = (objective(up) - objective(dn)) / (2.0 * h);
    CHECK(rel_err(grad[i], fd) < 1e-6);
  }
  CHECK_THROWS_AS(conditioning_split(Tensor({2, 2, 5})), DimensionError);
}

TEST_CASE("loss total equals the sum of its reported components") {
  Rng rng(17);
  CodecModel m = make_codec_model(0.03, 2, rng);
  Tensor x = synth_image(32, 32, rng);
  LossBreakdown lb = codec_loss(m, x, QuantizeMode::kRound, nullptr, nullptr);
  CHECK(std::isfinite(lb.total));
  CHECK(lb.main_bits > 0.0);
  CHECK(lb.side_bits > 0.0);
  CHECK(lb.distortion >= 0.0);
  CHECK(std::abs(lb.total - (lb.main_bits + lb.side_bits + m.lambda * lb.distortion)) <= 1e-12);

  LossBreakdown again = codec_loss(m, x, QuantizeMode::kRound, nullptr, nullptr);
  CHECK(again.total == lb.total);

  const double a = noise_loss(m, x, 123);
  const double b = noise_loss(m, x, 123);
  const double c = noise_loss(m, x, 456);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("loss input validation") {
  Rng rng(18);
  CodecModel m = make_codec_model(0.01, 1, rng);
  CHECK_THROWS_AS(codec_loss(m, Tensor({30, 32, 3}), QuantizeMode::kRound, nullptr, nullptr),
                  DataError);
  CHECK_THROWS_AS(codec_loss(m, Tensor({32, 32, 1}), QuantizeMode::kRound, nullptr, nullptr),
                  DataError);
  Tensor ok({32, 32, 3});
  CHECK_THROWS_AS(codec_loss(m, ok, QuantizeMode::kNoise, nullptr, nullptr), ConfigError);
}

TEST_CASE("loss gradients match finite differences along random directions") {
  Rng rng(29);
  CodecModel m = make_codec_model(0.01, 1, rng);
  Tensor x = synth_image(32, 32, rng);
  const uint64_t kNoiseSeed = 2024;

  Rng noise(kNoiseSeed);
  LossGrads g;
  codec_loss(m, x, QuantizeMode::kNoise, &noise, &g);
  std::vector<const Tensor*> grads = grad_refs(m, g);
  std::vector<ParamRef> params = model_parameters(m);
  REQUIRE(grads.size() == params.size());

  Rng dir_rng(555);
  for (size_t p = 0; p < params.size(); ++p) {
    Tensor& theta = *params[p].tensor;
    Tensor dir = Tensor::random_normal(theta.shape(), 1.0, dir_rng);
    const double scale = 1.0 / std::max(1.0, l2_norm(dir));
    for (int64_t i = 0; i < dir.size(); ++i) dir[i] *= scale;

    const double analytic = dot(*grads[p], dir);
    // A secant crossing an activation kink inflates the difference quotient;
    // a smaller step pulls back inside the linear piece, so take the better
    // of two step sizes.
    double best = 1e300;
    for (const double h : {1e-4, 1e-6}) {
      Tensor saved = theta;
      axpy(theta, h, dir);
      const double up = noise_loss(m, x, kNoiseSeed);
      theta = saved;
      axpy(theta, -h, dir);
      const double dn = noise_loss(m, x, kNoiseSeed);
      theta = saved;
      best = std::min(best, rel_err(analytic, (up - dn) / (2.0 * h)));
    }
    INFO("parameter ", params[p].name);
    CHECK(best < 1e-4);
  }
}

TEST_CASE("distortion-only and rate-only gradient sanity") {
  Rng rng(41);
  CodecModel m = make_codec_model(0.01, 1, rng);
  Tensor x = synth_image(32, 32, rng);
  Rng noise(9);
  LossGrads g;
  LossBreakdown lb = codec_loss(m, x, QuantizeMode::kNoise, &noise, &g);
  CHECK(lb.total > 0.0);
  // Synthesis-stack gradients must be driven purely by distortion: with
  // lambda -> 0 they should shrink proportionally everywhere.
  CodecModel m2 = m;
  m2.lambda = m.lambda * 0.5;
  Rng noise2(9);
  LossGrads g2;
  codec_loss(m2, x, QuantizeMode::kNoise, &noise2, &g2);
  const Tensor& gw = g.synthesis[0].weights;
  const Tensor& gw2 = g2.synthesis[0].weights;
  for (int64_t i = 0; i < gw.size(); ++i) {
    CHECK(rel_err(gw2[i], 0.5 * gw[i]) < 1e-9);
  }
  // Prior gradients carry no distortion term, so they are lambda-invariant.
  for (int64_t i = 0; i < g.d_loc.size(); ++i) {
    CHECK(rel_err(g2.d_loc[i], g.d_loc[i]) < 1e-12);
  }
}

TEST_CASE("side-rate gradient of the main code matches finite differences") {
  Rng rng(53);
  CodecModel m = make_codec_model(0.01, 1, rng);
  Tensor x = synth_image(32, 32, rng);
  Tensor y = stack_forward(m.analysis, x);
  Tensor y_hat = quantize_round(y);
  Tensor z_hat = quantize_round(stack_forward(m.hyper_analysis, y));

  auto main_bits_of = [&](const Tensor& z) {
    Conditioning c = conditioning_split(stack_forward(m.hyper_synthesis, z));
    return gaussian_bits_eval(y_hat, c.mu, c.sigma).bits;
  };

  Tensor grad = grad_main_bits_wrt_side(m, y_hat, z_hat);
  CHECK(grad.shape() == z_hat.shape());

  Rng pick(7);
  for (int trial = 0; trial < 24; ++trial) {
    const int64_t i = static_cast<int64_t>(pick.uniform_index(static_cast<size_t>(z_hat.size())));
    Tensor up = z_hat, dn = z_hat;
    const double h = 1e-5;
    up[i] += h;
    dn[i] -= h;
    const double fd = (main_bits_of(up) - main_bits_of(dn)) / (2.0 * h);
    CHECK(rel_err(grad[i], fd) < 1e-4);
  }

  // Constant conditioning (zeroed hyper-synthesis weights) makes the main
  // code independent of the side latents.
  CodecModel flat = m;
  for (auto& layer : flat.hyper_synthesis) {
    if (layer.has_params()) layer.weights.fill(0.0);
  }
  Tensor zero_grad = grad_main_bits_wrt_side(flat, y_hat, z_hat);
  CHECK(max_abs(zero_grad) == 0.0);
}

TEST_CASE("checkpoint write/read restores the model exactly") {
  Rng rng(67);
  CodecModel m = make_codec_model(0.1, 3, rng);
  const std::string path = "test_ckpt_roundtrip.bin";
  save_model(path, m);
  CodecModel r = load_model(path);

  CHECK(r.lambda == m.lambda);
  CHECK(r.lambda_index == m.lambda_index);
  std::vector<ParamRef> pa = model_parameters(m);
  std::vector<ParamRef> pb = model_parameters(r);
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    REQUIRE(pa[i].tensor->size() == pb[i].tensor->size());
    for (int64_t j = 0; j < pa[i].tensor->size(); ++j) {
      CHECK((*pa[i].tensor)[j] == (*pb[i].tensor)[j]);
    }
  }

  // Loss parity on a fresh image proves structural equality too.
  Tensor x = synth_image(32, 32, rng);
  CHECK(codec_loss(m, x, QuantizeMode::kRound, nullptr, nullptr).total ==
        codec_loss(r, x, QuantizeMode::kRound, nullptr, nullptr).total);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint loader rejects malformed files") {
  Rng rng(71);
  CodecModel m = make_codec_model(0.003, 0, rng);
  const std::string path = "test_ckpt_malformed.bin";
  save_model(path, m);
  std::vector<uint8_t> bytes = read_file_bytes(path);

  auto expect_reject = [&](std::vector<uint8_t> mutated) {
    write_file_bytes(path, mutated);
    CHECK_THROWS_AS(load_model(path), FormatError);
  };

  std::vector<uint8_t> bad_magic = bytes;
  bad_magic[0] = 'X';
  expect_reject(bad_magic);

  std::vector<uint8_t> truncated(bytes.begin(), bytes.begin() + bytes.size() / 2);
  expect_reject(truncated);

  std::vector<uint8_t> trailing = bytes;
  trailing.push_back(0);
  expect_reject(trailing);

  std::remove(path.c_str());
}
