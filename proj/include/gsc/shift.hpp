#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gsc/bitstream.hpp"
#include "gsc/entropy.hpp"
#include "gsc/model.hpp"

namespace gsc {

/// Candidate step sizes applied to the entropy gradient at decode time.
/// Descent on the negative-log-likelihood surface needs non-positive steps;
/// index 0 keeps the no-op available so selection can never regress. This
/// table is part of the wire format (see kFormatVersion).
inline constexpr double kStepTable[kShiftIndexCount] = {0.0,  -0.25, -0.5, -1.0,
                                                        -2.0, -4.0,  -8.0, -16.0};
inline constexpr int kStepCount = kShiftIndexCount;

/// Injection points so selection can be tested against stub networks and so
/// the pipeline can count passes: condition maps side latents to (mu, sigma)
/// grids (one hyper-synthesis pass), synthesize maps main latents to an
/// unclamped image (one synthesis pass).
using ConditionFn = std::function<Conditioning(const Tensor&)>;
using SynthesizeFn = std::function<Tensor(const Tensor&)>;

/// Per-element coding tables for a conditioning grid, in scan order.
std::vector<DiscretePmf> conditional_pmfs(const Conditioning& cond);

/// Exact size of rounded latents coded with the given tables, in bits
/// (out-of-table symbols priced at their escape cost).
double coded_bits_total(const Tensor& latents, const std::vector<DiscretePmf>& pmfs);

/// Winner of the side-shift search: the step whose shifted side latents
/// condition the cheapest exact coding of y_hat.
struct RhoFChoice {
  int index = 0;
  double coded_bits = 0.0;     // objective at the winner
  double baseline_bits = 0.0;  // objective at step 0
  Tensor shifted_z;
  Conditioning cond;
  std::vector<DiscretePmf> pmfs;
};

/// Brute-force argmin over all table entries (always evaluates all 8).
/// Ties break toward smaller |step|, then smaller index, so a zero gradient
/// returns index 0 and the winner never codes worse than step 0.
RhoFChoice select_rho_f(const Tensor& y_hat, const Tensor& z_hat, const Tensor& grad_side_bits,
                        const ConditionFn& condition);
/// Convenience wrapper: gradient from the side prior, conditioning from the
/// model's hyper-synthesis stack.
RhoFChoice select_rho_f(const Tensor& y_hat, const Tensor& z_hat, const CodecModel& model);

/// Winner of the main-shift search: the step minimizing reconstruction
/// error of the synthesized (clamped) image against the source.
struct RhoHChoice {
  int index = 0;
  double distortion = 0.0;           // 8-bit-scale MSE at the winner
  double baseline_distortion = 0.0;  // at step 0
  Tensor shifted_y;
  Tensor reconstruction;  // clamped winner reconstruction
};

/// Exactly 8 synthesis passes; the gradient is computed once by the caller.
RhoHChoice select_rho_h(const Tensor& x, const Tensor& y_hat, const Tensor& grad_main_bits,
                        const SynthesizeFn& synthesize);
/// Convenience wrapper: conditioning from shifted_z through the model (one
/// extra hyper-synthesis pass), gradient from the conditional model.
RhoHChoice select_rho_h(const Tensor& x, const Tensor& y_hat, const Tensor& shifted_z,
                        const CodecModel& model);

/// What the encoder decided and achieved for one image. Deltas are
/// (winner - step 0) and are never positive. Correlation diagnostics are
/// filled by the reporting layer; NaN when not computed or undefined.
struct ShiftDecision {
  int rho_f_index = 0;
  int rho_h_index = 0;
  double main_bits_delta = 0.0;
  double distortion_delta = 0.0;
  double corr_side = std::numeric_limits<double>::quiet_NaN();
  double corr_main = std::numeric_limits<double>::quiet_NaN();
};

/// Decoder-side application of the signaled shifts; needs only the stream
/// and the model. Returns the clamped reconstruction. Implemented by the
/// pipeline (it is the decode path).
Tensor apply_shift_decoder_side(const Bitstream& stream, const CodecModel& model);

/// One row of the per-image gain report (CSV columns in this order).
struct GainRow {
  std::string image_id;
  double lambda = 0.0;
  double bpp_base = 0.0;
  double bpp_shift = 0.0;
  double psnr_base = 0.0;
  double psnr_shift = 0.0;
  int rho_f_idx = 0;
  int rho_h_idx = 0;
  double corr_side = std::numeric_limits<double>::quiet_NaN();
  double corr_main = std::numeric_limits<double>::quiet_NaN();
  bool flagged = false;  // undefined correlation (zero variance); excluded
                          // from survey statistics
};

/// Encodes every image with and without shifts under every model and
/// gathers per-image gains and gradient correlations.
std::vector<GainRow> shift_gain_report(const std::vector<Tensor>& images,
                                       const std::vector<std::string>& image_ids,
                                       const std::vector<CodecModel>& models);

void write_gain_csv(const std::string& path, const std::vector<GainRow>& rows);

}  // namespace gsc
