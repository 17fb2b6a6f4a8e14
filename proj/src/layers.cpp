#include "gsc/layers.hpp"

#include <cmath>

namespace gsc {

namespace {

void check_input(const Tensor& input, const LayerParams& p, const char* what) {
  if (input.rank() != 3) {
    throw DimensionError(std::string(what) + ": expected rank-3 (h,w,c) input, got " +
                         input.shape_str());
  }
  if (input.dim(2) != p.in_channels) {
    throw DimensionError(std::string(what) + ": input " + input.shape_str() +
                         " has " + std::to_string(input.dim(2)) +
                         " channels, layer expects " + std::to_string(p.in_channels));
  }
}

void check_upstream(const Tensor& upstream, const Tensor& expected_shape,
                    const char* what) {
  if (!upstream.same_shape(expected_shape)) {
    throw DimensionError(std::string(what) + ": upstream gradient " +
                         upstream.shape_str() + " does not match forward output " +
                         expected_shape.shape_str());
  }
}

}  // namespace

LayerParams LayerParams::conv(int in_ch, int out_ch, int kernel, int stride,
                              int padding) {
  LayerParams p;
  p.kind = LayerKind::kConv;
  p.in_channels = in_ch;
  p.out_channels = out_ch;
  p.kernel = kernel;
  p.stride = stride;
  p.padding = padding;
  p.weights = Tensor({kernel, kernel, in_ch, out_ch});
  p.bias = Tensor({out_ch});
  return p;
}

LayerParams LayerParams::transposed_conv(int in_ch, int out_ch, int kernel, int stride,
                                         int padding) {
  LayerParams p = conv(in_ch, out_ch, kernel, stride, padding);
  p.kind = LayerKind::kTransposedConv;
  return p;
}

LayerParams LayerParams::activation(double slope) {
  LayerParams p;
  p.kind = LayerKind::kActivation;
  p.slope = slope;
  return p;
}

void LayerParams::init_random(Rng& rng) {
  if (!has_params()) return;
  double fan_in = static_cast<double>(kernel) * kernel * in_channels;
  double stddev = std::sqrt(2.0 / fan_in);
  for (int64_t i = 0; i < weights.size(); ++i) weights[i] = stddev * rng.normal();
  bias.fill(0.0);
}

std::pair<int, int> layer_output_hw(const LayerParams& p, int h, int w) {
  if (p.kind == LayerKind::kActivation) return {h, w};
  if (p.kind == LayerKind::kConv) {
    int oh = (h + 2 * p.padding - p.kernel) / p.stride + 1;
    int ow = (w + 2 * p.padding - p.kernel) / p.stride + 1;
    if (h + 2 * p.padding < p.kernel || w + 2 * p.padding < p.kernel) {
      throw DimensionError("conv input " + std::to_string(h) + "x" + std::to_string(w) +
                           " smaller than kernel " + std::to_string(p.kernel));
    }
    return {oh, ow};
  }
  int oh = (h - 1) * p.stride - 2 * p.padding + p.kernel;
  int ow = (w - 1) * p.stride - 2 * p.padding + p.kernel;
  if (oh <= 0 || ow <= 0) {
    throw DimensionError("transposed conv produces empty output from " +
                         std::to_string(h) + "x" + std::to_string(w));
  }
  return {oh, ow};
}

Tensor conv2d_forward(const Tensor& input, const LayerParams& p) {
  check_input(input, p, "conv2d_forward");
  const int h = input.dim(0), w = input.dim(1);
  const int ci = p.in_channels, co = p.out_channels, k = p.kernel;
  auto [oh, ow] = layer_output_hw(p, h, w);
  Tensor out({oh, ow, co});

  const double* in = input.data();
  const double* wt = p.weights.data();
  const double* b = p.bias.data();
  double* o = out.data();

  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double* orow = o + (static_cast<int64_t>(oy) * ow + ox) * co;
      for (int oc = 0; oc < co; ++oc) orow[oc] = b[oc];
      for (int ky = 0; ky < k; ++ky) {
        int iy = oy * p.stride - p.padding + ky;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < k; ++kx) {
          int ix = ox * p.stride - p.padding + kx;
          if (ix < 0 || ix >= w) continue;
          const double* irow = in + (static_cast<int64_t>(iy) * w + ix) * ci;
          const double* wrow = wt + (static_cast<int64_t>(ky) * k + kx) * ci * co;
          for (int ic = 0; ic < ci; ++ic) {
            double v = irow[ic];
            const double* wr = wrow + static_cast<int64_t>(ic) * co;
            for (int oc = 0; oc < co; ++oc) orow[oc] += v * wr[oc];
          }
        }
      }
    }
  }
  return out;
}

LayerGrads conv2d_backward(const Tensor& input, const LayerParams& p,
                           const Tensor& upstream) {
  check_input(input, p, "conv2d_backward");
  const int h = input.dim(0), w = input.dim(1);
  const int ci = p.in_channels, co = p.out_channels, k = p.kernel;
  auto [oh, ow] = layer_output_hw(p, h, w);
  check_upstream(upstream, Tensor({oh, ow, co}), "conv2d_backward");

  LayerGrads g;
  g.input = Tensor({h, w, ci});
  g.weights = Tensor::zeros_like(p.weights);
  g.bias = Tensor::zeros_like(p.bias);

  const double* in = input.data();
  const double* wt = p.weights.data();
  const double* up = upstream.data();
  double* gi = g.input.data();
  double* gw = g.weights.data();
  double* gb = g.bias.data();

  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const double* urow = up + (static_cast<int64_t>(oy) * ow + ox) * co;
      for (int oc = 0; oc < co; ++oc) gb[oc] += urow[oc];
      for (int ky = 0; ky < k; ++ky) {
        int iy = oy * p.stride - p.padding + ky;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < k; ++kx) {
          int ix = ox * p.stride - p.padding + kx;
          if (ix < 0 || ix >= w) continue;
          const double* irow = in + (static_cast<int64_t>(iy) * w + ix) * ci;
          double* girow = gi + (static_cast<int64_t>(iy) * w + ix) * ci;
          const int64_t wbase = (static_cast<int64_t>(ky) * k + kx) * ci * co;
          for (int ic = 0; ic < ci; ++ic) {
            const double* wr = wt + wbase + static_cast<int64_t>(ic) * co;
            double* gwr = gw + wbase + static_cast<int64_t>(ic) * co;
            double v = irow[ic];
            double acc = 0.0;
            for (int oc = 0; oc < co; ++oc) {
              double u = urow[oc];
              acc += u * wr[oc];
              gwr[oc] += u * v;
            }
            girow[ic] += acc;
          }
        }
      }
    }
  }
  return g;
}

Tensor transposed_conv2d_forward(const Tensor& input, const LayerParams& p) {
  check_input(input, p, "transposed_conv2d_forward");
  const int h = input.dim(0), w = input.dim(1);
  const int ci = p.in_channels, co = p.out_channels, k = p.kernel;
  auto [oh, ow] = layer_output_hw(p, h, w);
  Tensor out({oh, ow, co});

  const double* in = input.data();
  const double* wt = p.weights.data();
  const double* b = p.bias.data();
  double* o = out.data();

  for (int64_t i = 0; i < out.size(); i += co) {
    for (int oc = 0; oc < co; ++oc) o[i + oc] = b[oc];
  }

  for (int iy = 0; iy < h; ++iy) {
    for (int ix = 0; ix < w; ++ix) {
      const double* irow = in + (static_cast<int64_t>(iy) * w + ix) * ci;
      for (int ky = 0; ky < k; ++ky) {
        int oy = iy * p.stride - p.padding + ky;
        if (oy < 0 || oy >= oh) continue;
        for (int kx = 0; kx < k; ++kx) {
          int ox = ix * p.stride - p.padding + kx;
          if (ox < 0 || ox >= ow) continue;
          double* orow = o + (static_cast<int64_t>(oy) * ow + ox) * co;
          const int64_t wbase = (static_cast<int64_t>(ky) * k + kx) * ci * co;
          for (int ic = 0; ic < ci; ++ic) {
            double v = irow[ic];
            const double* wr = wt + wbase + static_cast<int64_t>(ic) * co;
            for (int oc = 0; oc < co; ++oc) orow[oc] += v * wr[oc];
          }
        }
      }
    }
  }
  return out;
}

LayerGrads transposed_conv2d_backward(const Tensor& input, const LayerParams& p,
                                      const Tensor& upstream) {
  check_input(input, p, "transposed_conv2d_backward");
  const int h = input.dim(0), w = input.dim(1);
  const int ci = p.in_channels, co = p.out_channels, k = p.kernel;
  auto [oh, ow] = layer_output_hw(p, h, w);
  check_upstream(upstream, Tensor({oh, ow, co}), "transposed_conv2d_backward");

  LayerGrads g;
  g.input = Tensor({h, w, ci});
  g.weights = Tensor::zeros_like(p.weights);
  g.bias = Tensor::zeros_like(p.bias);

  const double* in = input.data();
  const double* wt = p.weights.data();
  const double* up = upstream.data();
  double* gi = g.input.data();
  double* gw = g.weights.data();
  double* gb = g.bias.data();

  for (int64_t i = 0; i < upstream.size(); i += co) {
    for (int oc = 0; oc < co; ++oc) gb[oc] += up[i + oc];
  }

  for (int iy = 0; iy < h; ++iy) {
    for (int ix = 0; ix < w; ++ix) {
      const double* irow = in + (static_cast<int64_t>(iy) * w + ix) * ci;
      double* girow = gi + (static_cast<int64_t>(iy) * w + ix) * ci;
      for (int ky = 0; ky < k; ++ky) {
        int oy = iy * p.stride - p.padding + ky;
        if (oy < 0 || oy >= oh) continue;
        for (int kx = 0; kx < k; ++kx) {
          int ox = ix * p.stride - p.padding + kx;
          if (ox < 0 || ox >= ow) continue;
          const double* urow = up + (static_cast<int64_t>(oy) * ow + ox) * co;
          const int64_t wbase = (static_cast<int64_t>(ky) * k + kx) * ci * co;
          for (int ic = 0; ic < ci; ++ic) {
            const double* wr = wt + wbase + static_cast<int64_t>(ic) * co;
            double* gwr = gw + wbase + static_cast<int64_t>(ic) * co;
            double v = irow[ic];
            double acc = 0.0;
            for (int oc = 0; oc < co; ++oc) {
              double u = urow[oc];
              acc += u * wr[oc];
              gwr[oc] += u * v;
            }
            girow[ic] += acc;
          }
        }
      }
    }
  }
  return g;
}

Tensor activation_forward(const Tensor& input, double slope) {
  Tensor out = input;
  double* d = out.data();
  for (int64_t i = 0; i < out.size(); ++i) {
    if (d[i] < 0.0) d[i] *= slope;
  }
  return out;
}

Tensor activation_backward(const Tensor& input, double slope, const Tensor& upstream) {
  require_same_shape(input, upstream, "activation_backward");
  Tensor out = upstream;
  double* d = out.data();
  const double* in = input.data();
  for (int64_t i = 0; i < out.size(); ++i) {
    if (in[i] <= 0.0) d[i] *= slope;
  }
  return out;
}

Tensor layer_forward(const Tensor& input, const LayerParams& p) {
  switch (p.kind) {
    case LayerKind::kConv:
      return conv2d_forward(input, p);
    case LayerKind::kTransposedConv:
      return transposed_conv2d_forward(input, p);
    case LayerKind::kActivation:
      return activation_forward(input, p.slope);
  }
  throw Error("unknown layer kind");
}

LayerGrads layer_backward(const Tensor& input, const LayerParams& p,
                          const Tensor& upstream) {
  switch (p.kind) {
    case LayerKind::kConv:
      return conv2d_backward(input, p, upstream);
    case LayerKind::kTransposedConv:
      return transposed_conv2d_backward(input, p, upstream);
    case LayerKind::kActivation: {
      LayerGrads g;
      g.input = activation_backward(input, p.slope, upstream);
      return g;
    }
  }
  throw Error("unknown layer kind");
}

}  // namespace gsc
