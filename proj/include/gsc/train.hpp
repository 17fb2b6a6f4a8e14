#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsc/model.hpp"
#include "gsc/rng.hpp"
#include "gsc/tensor.hpp"

namespace gsc {

struct TrainConfig {
  double learning_rate = 1e-3;
  /// Step size ramps linearly to learning_rate * final_lr_scale over the
  /// run; 1.0 keeps it constant.
  double final_lr_scale = 0.1;
  int batch_size = 1;
  int iterations = 2000;
  std::vector<int> lambda_indices = {0, 1, 2, 3};
  uint64_t seed = 1;
  std::string dataset_path;  // informational; datasets are passed in directly

  /// Throws ConfigError on non-positive sizes or out-of-range indices.
  void validate() const;
};

struct TrainResult {
  CodecModel model;
  std::vector<double> trajectory;  // objective value at every iteration
};

/// Trains one model for kLambdaGrid[lambda_index] from a seeded random
/// init. Fully deterministic for a given (config, dataset). Throws
/// TrainError with the iteration index on divergence.
TrainResult train_single(const TrainConfig& cfg, const std::vector<Tensor>& dataset,
                         int lambda_index);

/// Trailing-window running mean: out[i] = mean(values[max(0,i-window+1)..i]).
std::vector<double> smoothed_trajectory(const std::vector<double>& values, int window);

/// Rate/distortion objective evaluated at explicit latent grids (network
/// parameters fixed): conditioning from z_lat, main rate of y_lat under
/// it, side rate of z_lat, distortion of the synthesis of y_lat.
LossBreakdown latent_rd_loss(const CodecModel& model, const Tensor& x, const Tensor& y_lat,
                             const Tensor& z_lat);

struct LatentGrads {
  LossBreakdown loss;
  Tensor d_y;
  Tensor d_z;
};
LatentGrads latent_rd_grad(const CodecModel& model, const Tensor& x, const Tensor& y_lat,
                           const Tensor& z_lat);

struct FinetuneResult {
  LatentPair latents;           // rounded
  double loss = 0.0;            // objective at the returned rounded latents
  double baseline_loss = 0.0;   // objective at the plain encoder latents
  bool diverged = false;        // gradients blew up; baseline returned
  std::vector<double> trajectory;  // best rounded objective after each step
};

/// Gradient descent on the continuous latents of one image with the
/// network frozen, using the noise proxy for the step direction and an
/// accept/reject safeguard on the rounded objective, so the returned loss
/// never exceeds the baseline. iterations == 0 returns the baseline
/// encoder latents unchanged.
FinetuneResult finetune_latents(const CodecModel& model, const Tensor& x, int iterations,
                                uint64_t seed);

}  // namespace gsc
