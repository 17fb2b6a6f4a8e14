#pragma once

#include <cstdint>
#include <vector>

#include "gsc/tensor.hpp"

namespace gsc {

// Scale floor applied by the conditioning head that produces sigma grids;
// keeps likelihoods and their gradients well-conditioned.
constexpr double kSigmaMin = 0.11;

// Likelihood floor used when converting probabilities to bits and gradients.
// Elements that hit the floor are counted so diagnostics can spot saturation.
constexpr double kLikelihoodFloor = 0x1p-30;

/// Probability mass of the unit-width interval [v-0.5, v+0.5] under a
/// Gaussian with mean mu and scale sigma, with partial derivatives.
struct GaussianBin {
  double p;
  double dp_dv;
  double dp_dmu;
  double dp_dsigma;
};
GaussianBin gaussian_bin(double v, double mu, double sigma);

/// Same interval mass under a logistic density with the given location and
/// log-scale (scale = exp(log_scale)).
struct LogisticBin {
  double p;
  double dp_dv;
  double dp_dloc;
  double dp_dlog_scale;
};
LogisticBin logistic_bin(double v, double loc, double log_scale);

/// Per-channel logistic model for the side-latent grid: one learnable
/// (location, log-scale) pair per channel. Immutable value object once
/// trained; all evaluations below are pure.
struct FactorizedModel {
  Tensor loc;        // (channels)
  Tensor log_scale;  // (channels)

  FactorizedModel() = default;
  explicit FactorizedModel(int channels)
      : loc(Tensor({channels})), log_scale(Tensor({channels})) {}

  int channels() const { return loc.empty() ? 0 : loc.dim(0); }
};

/// Total code length in bits of a latent grid plus every gradient the
/// codec needs: w.r.t. the latents themselves (shift/fine-tune/diagnostics)
/// and w.r.t. the model parameters (training).
struct FactorizedEval {
  double bits = 0.0;
  Tensor d_latents;    // same shape as the evaluated grid
  Tensor d_loc;        // (channels)
  Tensor d_log_scale;  // (channels)
  int64_t clamped = 0; // elements whose likelihood hit kLikelihoodFloor
};
FactorizedEval factorized_bits_eval(const FactorizedModel& m, const Tensor& latents);

/// Bits and gradients of a latent grid under an elementwise Gaussian with
/// mean/scale grids of the same shape (produced by the conditioning head).
struct GaussianEval {
  double bits = 0.0;
  Tensor d_latents;
  Tensor d_mu;
  Tensor d_sigma;
  int64_t clamped = 0;
};
GaussianEval gaussian_bits_eval(const Tensor& latents, const Tensor& mu,
                                const Tensor& sigma);

/// Integer-frequency distribution over a contiguous run of symbol values,
/// ready for the range coder. In-support frequencies are all >= 1 and sum
/// to kTotal - kEscapeFreq; the top slot [kTotal - 1, kTotal) is an escape
/// used to bypass-code out-of-support symbols, so the full table sums to
/// exactly 2^16.
struct DiscretePmf {
  static constexpr uint32_t kTotal = 1u << 16;
  static constexpr uint32_t kEscapeFreq = 1;

  int32_t min_symbol = 0;
  std::vector<uint32_t> freq;  // per-symbol counts, all >= 1
  std::vector<uint32_t> cum;   // prefix sums, size freq.size() + 1

  int32_t max_symbol() const {
    return min_symbol + static_cast<int32_t>(freq.size()) - 1;
  }
  bool contains(int32_t v) const {
    return v >= min_symbol && v <= max_symbol();
  }

  /// Exact bits the range coder spends on this symbol: -log2(freq/2^16) in
  /// support, or 16 escape bits + 16 raw bypass bits outside it.
  double coded_bits(int32_t v) const;

  /// Throws CoderError if any structural invariant is broken.
  void validate() const;

  /// Builds the table from per-symbol counts that must sum to
  /// kTotal - kEscapeFreq with every count >= 1.
  static DiscretePmf from_counts(int32_t min_symbol, std::vector<uint32_t> counts);
};

/// Quantize a continuous density to a DiscretePmf. The candidate grid spans
/// +/- 12 standard deviations around the mean rounded outward; counts are
/// assigned by largest-remainder rounding and zero-count edge bins are
/// dropped (symbols there fall back to the escape path).
DiscretePmf discretize_gaussian(double mu, double sigma);
DiscretePmf discretize_logistic(double loc, double log_scale);

}  // namespace gsc
