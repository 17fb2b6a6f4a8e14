#pragma once

#include <limits>
#include <vector>

#include "gsc/tensor.hpp"

namespace gsc {

/// Reported when two images are bitwise identical ("lossless").
inline constexpr double kPsnrLossless = std::numeric_limits<double>::max();

/// Mean squared error between two [0,1]-scaled images, on the 8-bit scale
/// (multiplied by 255^2).
double mse255(const Tensor& a, const Tensor& b);

/// 10*log10(255^2 / mse); kPsnrLossless when mse == 0.
double psnr_from_mse255(double mse);
double psnr(const Tensor& a, const Tensor& b);

struct RDPoint {
  double bpp = 0.0;   // 8 * coded bytes / pixel count, headers included
  double psnr = 0.0;  // dB
};

/// One rate/distortion curve (one point per trade-off setting), ordered by
/// rate.
struct RDCurve {
  std::vector<RDPoint> points;

  /// Throws DataError unless there are >= 4 points with strictly
  /// increasing positive bpp, finite-or-sentinel psnr, and psnr
  /// non-decreasing in bpp.
  void validate() const;
};

/// Average percent rate difference of `test` against `ref` over their
/// common PSNR range (negative = test saves rate), from cubic fits of
/// log10(rate) as a function of PSNR, integrated in closed form.
/// Throws EvalError when the PSNR ranges do not overlap, a curve carries
/// the lossless sentinel, or a fit is degenerate.
double bd_rate(const RDCurve& ref, const RDCurve& test);

}  // namespace gsc
