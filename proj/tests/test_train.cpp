#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gsc/errors.hpp"
#include "gsc/image.hpp"
#include "gsc/model.hpp"
#include "gsc/train.hpp"
#include "test_util.hpp"

using namespace gsc;
using gsc::test::rel_err;

namespace {

std::vector<Tensor> tiny_dataset(int count, int hw, uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor> out;
  for (int i = 0; i < count; ++i) out.push_back(synth_image(hw, hw, rng));
  return out;
}

using gsc::test::tensors_equal;

}  // namespace

TEST_CASE("trailing-window smoothing matches a direct mean") {
  std::vector<double> v = {4, 2, 6, 1, 9, 3};
  std::vector<double> s = smoothed_trajectory(v, 3);
  REQUIRE(s.size() == v.size());
  CHECK(s[0] == doctest::Approx(4.0));
  CHECK(s[1] == doctest::Approx(3.0));
  CHECK(s[2] == doctest::Approx(4.0));
  CHECK(s[3] == doctest::Approx(3.0));
  CHECK(s[4] == doctest::Approx(16.0 / 3.0));
  CHECK(s[5] == doctest::Approx(13.0 / 3.0));
  CHECK_THROWS_AS(smoothed_trajectory(v, 0), ConfigError);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  TrainConfig bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.iterations = -3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.lambda_indices = {5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.lambda_indices.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("training rejects unusable datasets") {
  TrainConfig cfg;
  cfg.iterations = 1;
  CHECK_THROWS_AS(train_single(cfg, {}, 0), DataError);
  std::vector<Tensor> bad;
  bad.push_back(Tensor({30, 32, 3}));
  CHECK_THROWS_AS(train_single(cfg, bad, 0), DataError);
}

TEST_CASE("latent objective agrees with the training objective at rounded latents") {
  Rng rng(3);
  CodecModel m = make_codec_model(0.01, 1, rng);
  Tensor x = synth_image(32, 32, rng);
  Tensor y = stack_forward(m.analysis, x);
  Tensor z = stack_forward(m.hyper_analysis, y);
  LossBreakdown a = codec_loss(m, x, QuantizeMode::kRound, nullptr, nullptr);
  LossBreakdown b = latent_rd_loss(m, x, quantize_round(y), quantize_round(z));
  CHECK(rel_err(a.total, b.total) < 1e-12);
  CHECK(rel_err(a.main_bits, b.main_bits) < 1e-12);
  CHECK(rel_err(a.side_bits, b.side_bits) < 1e-12);
  CHECK(rel_err(a.distortion + 1.0, b.distortion + 1.0) < 1e-12);
}

TEST_CASE("latent gradients match finite differences") {
  Rng rng(13);
  CodecModel m = make_codec_model(0.03, 2, rng);
  Tensor x = synth_image(32, 32, rng);
  Tensor y = stack_forward(m.analysis, x);
  Tensor z = stack_forward(m.hyper_analysis, y);

  LatentGrads g = latent_rd_grad(m, x, y, z);
  CHECK(g.d_y.same_shape(y));
  CHECK(g.d_z.same_shape(z));
  CHECK(std::abs(g.loss.total - latent_rd_loss(m, x, y, z).total) == 0.0);

  Rng pick(99);
  auto check_coords = [&](Tensor& lat, const Tensor& grad, int trials) {
    for (int t = 0; t < trials; ++t) {
      const int64_t i =
          static_cast<int64_t>(pick.uniform_index(static_cast<size_t>(lat.size())));
      double best = 1e300;
      for (const double h : {1e-5, 1e-7}) {
        const double saved = lat[i];
        lat[i] = saved + h;
        const double up = latent_rd_loss(m, x, y, z).total;
        lat[i] = saved - h;
        const double dn = latent_rd_loss(m, x, y, z).total;
        lat[i] = saved;
        best = std::min(best, rel_err(grad[i], (up - dn) / (2.0 * h)));
      }
      CHECK(best < 1e-4);
    }
  };
  check_coords(y, g.d_y, 24);
  check_coords(z, g.d_z, 24);
}

TEST_CASE("zero-iteration latent refinement returns the plain encoder latents") {
  Rng rng(21);
  CodecModel m = make_codec_model(0.01, 1, rng);
  Tensor x = synth_image(32, 32, rng);
  FinetuneResult r = finetune_latents(m, x, 0, 7);
  Tensor y = stack_forward(m.analysis, x);
  Tensor z = stack_forward(m.hyper_analysis, y);
  CHECK(r.latents.state == LatentState::kRounded);
  CHECK(tensors_equal(r.latents.y, quantize_round(y)));
  CHECK(tensors_equal(r.latents.z, quantize_round(z)));
  CHECK(r.loss == r.baseline_loss);
  CHECK(!r.diverged);
  CHECK(r.trajectory.empty());
  CHECK(is_integer_valued(r.latents.y));
  CHECK(is_integer_valued(r.latents.z));
}

TEST_CASE("latent refinement is safeguarded and non-increasing") {
  Rng rng(22);
  CodecModel m = make_codec_model(0.01, 1, rng);
  Tensor x = synth_image(32, 32, rng);
  FinetuneResult r = finetune_latents(m, x, 40, 11);
  CHECK(!r.diverged);
  CHECK(r.loss <= r.baseline_loss);
  CHECK(is_integer_valued(r.latents.y));
  CHECK(is_integer_valued(r.latents.z));
  REQUIRE(r.trajectory.size() == 40);
  CHECK(r.trajectory.front() <= r.baseline_loss);
  for (size_t i = 1; i < r.trajectory.size(); ++i) {
    CHECK(r.trajectory[i] <= r.trajectory[i - 1]);
  }
  CHECK(r.loss == r.trajectory.back());
  // The returned loss is reproducible from the returned latents.
  CHECK(rel_err(latent_rd_loss(m, x, r.latents.y, r.latents.z).total, r.loss) < 1e-12);
}

TEST_CASE("short training runs are deterministic and seed-sensitive") {
  std::vector<Tensor> data = tiny_dataset(2, 32, 17);
  TrainConfig cfg;
  cfg.iterations = 25;
  cfg.learning_rate = 1e-3;
  cfg.seed = 42;

  TrainResult a = train_single(cfg, data, 1);
  TrainResult b = train_single(cfg, data, 1);
  REQUIRE(a.trajectory.size() == 25);
  CHECK(a.trajectory == b.trajectory);
  CodecModel& ma = a.model;
  CodecModel& mb = b.model;
  std::vector<ParamRef> pa = model_parameters(ma);
  std::vector<ParamRef> pb = model_parameters(mb);
  for (size_t i = 0; i < pa.size(); ++i) CHECK(tensors_equal(*pa[i].tensor, *pb[i].tensor));

  cfg.seed = 43;
  TrainResult c = train_single(cfg, data, 1);
  CHECK(a.trajectory != c.trajectory);

  for (double v : a.trajectory) CHECK(std::isfinite(v));
}

TEST_CASE("training fits a single image and reduces the smoothed objective") {
  std::vector<Tensor> data = tiny_dataset(1, 32, 5);
  TrainConfig cfg;
  cfg.iterations = 700;
  cfg.learning_rate = 1e-3;
  cfg.seed = 9;

  TrainResult r = train_single(cfg, data, 1);
  const int window = 100;
  std::vector<double> s = smoothed_trajectory(r.trajectory, window);
  // Strictly lower smoothed objective than at the start, by a wide margin.
  CHECK(s.back() < 0.5 * s.front());
  // After the first full window the smoothed curve is monotone non-increasing
  // up to sampling noise of the window mean: an upward move is only counted
  // as a violation if it exceeds four standard errors of the local window.
  int violations = 0;
  for (size_t i = window; i + 1 < s.size(); ++i) {
    double var = 0.0;
    for (size_t j = i + 2 - window; j <= i + 1; ++j) {
      const double d = r.trajectory[j] - s[i + 1];
      var += d * d;
    }
    const double se = std::sqrt(var / window) / std::sqrt(double(window));
    if (s[i + 1] > s[i] + 4.0 * se) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("a larger trade-off weight buys distortion with bits") {
  // Uses the grid extremes (33x apart) so the trade-off pressure dominates
  // the run-to-run noise of short stochastic training.
  std::vector<Tensor> data = tiny_dataset(2, 32, 71);
  TrainConfig cfg;
  cfg.iterations = 2000;
  cfg.learning_rate = 3e-3;
  cfg.final_lr_scale = 0.05;
  cfg.seed = 33;

  TrainResult lo = train_single(cfg, data, 0);   // lambda = 0.003
  TrainResult hi = train_single(cfg, data, 3);   // lambda = 0.1

  double lo_bits = 0.0, lo_dist = 0.0, hi_bits = 0.0, hi_dist = 0.0;
  for (const Tensor& img : data) {
    LossBreakdown a = codec_loss(lo.model, img, QuantizeMode::kRound, nullptr, nullptr);
    LossBreakdown b = codec_loss(hi.model, img, QuantizeMode::kRound, nullptr, nullptr);
    lo_bits += a.main_bits + a.side_bits;
    lo_dist += a.distortion;
    hi_bits += b.main_bits + b.side_bits;
    hi_dist += b.distortion;
  }
  CHECK(hi_dist < lo_dist);
  CHECK(hi_bits > lo_bits);
}
