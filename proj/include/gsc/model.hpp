#pragma once

#include <string>
#include <vector>

#include "gsc/entropy.hpp"
#include "gsc/layers.hpp"
#include "gsc/rng.hpp"
#include "gsc/tensor.hpp"

namespace gsc {

/// Rate/distortion trade-off grid; index is signaled in bitstream headers.
constexpr double kLambdaGrid[] = {0.003, 0.01, 0.03, 0.1};
constexpr int kLambdaCount = 4;

/// Every resampling layer halves/doubles resolution; three analysis stages
/// plus two hyper-analysis stages give a total downsampling of 32.
constexpr int kDownsample = 32;
/// Image-to-main-latent downsampling (the three analysis stages).
constexpr int kMainDownsample = 8;

/// The learned codec: analysis/synthesis transform pair for the main
/// latents, hyper pair for the side latents, per-channel side prior, and
/// the trade-off weight it was trained for.
struct CodecModel {
  std::vector<LayerParams> analysis;         // image -> main latents
  std::vector<LayerParams> synthesis;        // main latents -> image
  std::vector<LayerParams> hyper_analysis;   // main latents -> side latents
  std::vector<LayerParams> hyper_synthesis;  // side latents -> (mu, sigma raw)
  FactorizedModel side_prior;
  double lambda = 0.0;
  int lambda_index = 0;

  int main_channels() const;  // o
  int side_channels() const;  // f

  /// Throws DimensionError/ConfigError when stacks do not chain or the
  /// conditioning head does not produce 2*o channels.
  void validate() const;
};

/// Fixed desk-scale architecture (4x4 kernels, stride 2, padding 1
/// everywhere; leaky-ReLU 0.01 between layers) with seeded He init.
CodecModel make_codec_model(double lambda, int lambda_index, Rng& rng);

/// Stable map from a model's tensors to (name, pointer) pairs in a fixed
/// order, used by the optimizer and the checkpoint format.
struct ParamRef {
  std::string name;
  Tensor* tensor;
};
std::vector<ParamRef> model_parameters(CodecModel& model);

/// Forward through a layer stack. The traced variant retains each layer's
/// input for the backward sweep.
Tensor stack_forward(const std::vector<LayerParams>& stack, const Tensor& x);

struct StackTrace {
  std::vector<Tensor> inputs;  // input of every layer, in order
  Tensor output;
};
StackTrace stack_forward_traced(const std::vector<LayerParams>& stack, const Tensor& x);

struct StackGrads {
  std::vector<LayerGrads> layers;  // aligned with the stack
  Tensor input;                    // gradient w.r.t. the stack input
};
StackGrads stack_backward(const std::vector<LayerParams>& stack, const StackTrace& trace,
                          const Tensor& upstream);

/// Gradient w.r.t. the stack input only (parameter gradients discarded).
Tensor stack_input_grad(const std::vector<LayerParams>& stack, const StackTrace& trace,
                        const Tensor& upstream);

/// Conditioning head: splits the hyper-synthesis output into a mean grid
/// and a floored-softplus scale grid (sigma = kSigmaMin + softplus(raw)).
struct Conditioning {
  Tensor mu;
  Tensor sigma;
};
Conditioning conditioning_split(const Tensor& hyper_out);

/// Chain rule back through conditioning_split: gradients w.r.t. (mu, sigma)
/// become a gradient w.r.t. the raw hyper-synthesis output.
Tensor conditioning_merge_grads(const Tensor& hyper_out, const Tensor& d_mu,
                                const Tensor& d_sigma);

/// Elementwise quantization: nearest integer with ties to even, or the
/// additive-uniform-noise training proxy.
Tensor quantize_round(const Tensor& t);
Tensor quantize_noise(const Tensor& t, Rng& rng);

/// Main/side latent grids for one image, tagged with how far along the
/// quantization pipeline they are. Rounded latents are integer-valued;
/// shifted latents are rounded latents plus a real-valued offset (never
/// re-rounded).
enum class LatentState { kContinuous, kRounded, kShifted };

struct LatentPair {
  Tensor y;  // main latents
  Tensor z;  // side latents
  LatentState state = LatentState::kContinuous;
};

/// True when every element is an integer (rounded-state invariant).
bool is_integer_valued(const Tensor& t);

/// Rate/distortion objective for one image. Rates are bits per pixel;
/// distortion is mean squared error on the 8-bit (0..255) scale, so the
/// lambda grid above lands in the intended bpp range.
struct LossBreakdown {
  double total = 0.0;
  double main_bits = 0.0;  // per pixel
  double side_bits = 0.0;  // per pixel
  double distortion = 0.0;
  int64_t clamped = 0;
};

enum class QuantizeMode { kRound, kNoise };

/// Parameter gradients aligned with model_parameters() order.
struct LossGrads {
  std::vector<LayerGrads> analysis, synthesis, hyper_analysis, hyper_synthesis;
  Tensor d_loc, d_log_scale;
};

/// Evaluates the objective; when grads is non-null, also runs the full
/// hand-chained backward pass over every parameter. noise_rng is required
/// in noise mode. Throws TrainError naming the component on non-finite
/// values.
LossBreakdown codec_loss(const CodecModel& model, const Tensor& x, QuantizeMode mode,
                         Rng* noise_rng, LossGrads* grads);

/// Flattens a LossGrads into tensors aligned one-to-one with
/// model_parameters(model).
std::vector<Tensor*> loss_grad_tensors(const CodecModel& model, LossGrads& grads);

/// Gradient of total main-code bits with respect to the (continuous) side
/// latents, chained through hyper-synthesis and the conditioning head.
Tensor grad_main_bits_wrt_side(const CodecModel& model, const Tensor& y_hat,
                               const Tensor& z_hat);

/// Checkpoint serialization (magic "GSC1"). Load validates structure and
/// model invariants; malformed files throw FormatError.
void save_model(const std::string& path, const CodecModel& model);
CodecModel load_model(const std::string& path);

}  // namespace gsc
