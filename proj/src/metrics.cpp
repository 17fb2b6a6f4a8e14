#include "gsc/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "gsc/errors.hpp"

namespace gsc {

double mse255(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse inputs");
  if (a.size() == 0) throw DimensionError("mse: empty tensors");
  double se = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    se += d * d;
  }
  return 65025.0 * se / static_cast<double>(a.size());
}

double psnr_from_mse255(double mse) {
  if (!(mse >= 0.0)) throw EvalError("psnr: negative or non-finite mse");
  if (mse == 0.0) return kPsnrLossless;
  return 10.0 * std::log10(65025.0 / mse);
}

double psnr(const Tensor& a, const Tensor& b) { return psnr_from_mse255(mse255(a, b)); }

void RDCurve::validate() const {
  if (points.size() < 4) {
    throw DataError("rd curve: need at least 4 points, have " + std::to_string(points.size()));
  }
  for (size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].bpp > 0.0) || !std::isfinite(points[i].bpp)) {
      throw DataError("rd curve: bpp must be positive and finite");
    }
    const bool sentinel = points[i].psnr == kPsnrLossless;
    if (!sentinel && !std::isfinite(points[i].psnr)) {
      throw DataError("rd curve: psnr must be finite or the lossless sentinel");
    }
    if (i > 0) {
      if (!(points[i].bpp > points[i - 1].bpp)) {
        throw DataError("rd curve: bpp must be strictly increasing");
      }
      if (points[i].psnr < points[i - 1].psnr) {
        throw DataError("rd curve: psnr must be non-decreasing in bpp");
      }
    }
  }
}

namespace {

struct Cubic {
  // c[0] + c[1] x + c[2] x^2 + c[3] x^3 with x already mean-shifted.
  std::array<double, 4> c{};
  double shift = 0.0;

  double eval(double x) const {
    const double t = x - shift;
    return c[0] + t * (c[1] + t * (c[2] + t * c[3]));
  }
  /// Definite integral over [lo, hi].
  double integral(double lo, double hi) const {
    auto anti = [&](double x) {
      const double t = x - shift;
      return t * (c[0] + t * (c[1] / 2.0 + t * (c[2] / 3.0 + t * c[3] / 4.0)));
    };
    return anti(hi) - anti(lo);
  }
};

/// Least-squares cubic of y(x), solved by normal equations on mean-shifted
/// x for conditioning.
Cubic fit_cubic(const std::vector<double>& xs, const std::vector<double>& ys) {
  const size_t n = xs.size();
  Cubic fit;
  double mean = 0.0;
  for (double x : xs) mean += x;
  fit.shift = mean / static_cast<double>(n);

  // Normal equations A c = b with A[i][j] = sum t^(i+j), b[i] = sum y t^i.
  std::array<double, 7> pow_sum{};
  std::array<double, 4> b{};
  for (size_t k = 0; k < n; ++k) {
    const double t = xs[k] - fit.shift;
    double p = 1.0;
    for (int i = 0; i < 7; ++i) {
      pow_sum[static_cast<size_t>(i)] += p;
      if (i < 4) b[static_cast<size_t>(i)] += ys[k] * p;
      p *= t;
    }
  }
  double a[4][5];
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) a[i][j] = pow_sum[static_cast<size_t>(i + j)];
    a[i][4] = b[static_cast<size_t>(i)];
  }
  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-12) {
      throw EvalError("bd_rate: degenerate rate/distortion fit (repeated psnr values)");
    }
    std::swap(a[col], a[pivot]);
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int j = col; j < 5; ++j) a[r][j] -= f * a[col][j];
    }
  }
  for (int i = 0; i < 4; ++i) fit.c[static_cast<size_t>(i)] = a[i][4] / a[i][i];
  return fit;
}

Cubic fit_log_rate(const RDCurve& curve, const char* label) {
  curve.validate();
  std::vector<double> xs, ys;
  xs.reserve(curve.points.size());
  ys.reserve(curve.points.size());
  for (const RDPoint& p : curve.points) {
    if (p.psnr == kPsnrLossless) {
      throw EvalError(std::string("bd_rate: ") + label +
                      " curve contains a lossless point; rate fit undefined");
    }
    xs.push_back(p.psnr);
    ys.push_back(std::log10(p.bpp));
  }
  return fit_cubic(xs, ys);
}

}  // namespace

double bd_rate(const RDCurve& ref, const RDCurve& test) {
  const Cubic fr = fit_log_rate(ref, "reference");
  const Cubic ft = fit_log_rate(test, "test");

  const double lo = std::max(ref.points.front().psnr, test.points.front().psnr);
  const double hi = std::min(ref.points.back().psnr, test.points.back().psnr);
  if (!(hi > lo)) {
    throw EvalError("bd_rate: psnr ranges do not overlap");
  }
  const double avg_diff = (ft.integral(lo, hi) - fr.integral(lo, hi)) / (hi - lo);
  return (std::pow(10.0, avg_diff) - 1.0) * 100.0;
}

}  // namespace gsc
