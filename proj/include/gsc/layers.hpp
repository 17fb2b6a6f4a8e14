#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gsc/tensor.hpp"

namespace gsc {

enum class LayerKind : uint8_t {
  kConv = 0,
  kTransposedConv = 1,
  kActivation = 2,
};

/// One layer of a transform stack. Conv and transposed-conv weights are
/// stored as (kernel_y, kernel_x, in_channels, out_channels) with bias of
/// (out_channels). Activation layers are leaky-ReLU with the given negative
/// slope and carry no parameters.
struct LayerParams {
  LayerKind kind = LayerKind::kConv;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  int padding = 0;
  double slope = 0.0;
  Tensor weights;
  Tensor bias;

  static LayerParams conv(int in_ch, int out_ch, int kernel, int stride, int padding);
  static LayerParams transposed_conv(int in_ch, int out_ch, int kernel, int stride,
                                     int padding);
  static LayerParams activation(double slope);

  /// He-style fan-in scaled init for the weights, zero bias.
  void init_random(Rng& rng);

  bool has_params() const { return kind != LayerKind::kActivation; }
  int64_t param_count() const { return weights.size() + bias.size(); }
};

struct LayerGrads {
  Tensor input;    // gradient w.r.t. the layer input
  Tensor weights;  // zero-sized for activation layers
  Tensor bias;
};

// Input and output tensors are (height, width, channels).
Tensor conv2d_forward(const Tensor& input, const LayerParams& p);
LayerGrads conv2d_backward(const Tensor& input, const LayerParams& p,
                           const Tensor& upstream);

Tensor transposed_conv2d_forward(const Tensor& input, const LayerParams& p);
LayerGrads transposed_conv2d_backward(const Tensor& input, const LayerParams& p,
                                      const Tensor& upstream);

Tensor activation_forward(const Tensor& input, double slope);
// upstream is d(loss)/d(output); returns d(loss)/d(input)
Tensor activation_backward(const Tensor& input, double slope, const Tensor& upstream);

Tensor layer_forward(const Tensor& input, const LayerParams& p);
LayerGrads layer_backward(const Tensor& input, const LayerParams& p,
                          const Tensor& upstream);

/// Output spatial size of a layer given input (h, w).
std::pair<int, int> layer_output_hw(const LayerParams& p, int h, int w);

}  // namespace gsc
