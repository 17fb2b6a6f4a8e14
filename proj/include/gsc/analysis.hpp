#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gsc/model.hpp"
#include "gsc/shift.hpp"
#include "gsc/tensor.hpp"

namespace gsc {

/// Pearson correlation over flattened elements. Throws DimensionError on
/// shape mismatch or fewer than 2 elements, EvalError when either input has
/// zero variance (undefined correlation).
double pearson(const Tensor& a, const Tensor& b);

/// Stationarity diagnostics of the trained trade-off: at an optimal encoder
/// the dataset-mean side-latent gradient of (side bits + main bits) and the
/// dataset-mean main-latent gradient of (main bits + weighted distortion)
/// both vanish. Residuals are normalized by the mean magnitude of the
/// individual terms, so 0 means exact stationarity and O(1) means the two
/// terms are unrelated.
struct KKTReport {
  double residual_side = 0.0;  // defect of the side-latent condition
  double residual_main = 0.0;  // defect of the main-latent condition
  int64_t sample_count = 0;
};

/// Gradients are taken at the encoder's continuous latents for each image;
/// all images must share one size. Throws DataError on an empty dataset or
/// mixed sizes.
KKTReport kkt_residuals(const CodecModel& model, const std::vector<Tensor>& images);

/// Same diagnostics at caller-supplied latents (e.g. refined ones), one
/// pair per image.
KKTReport kkt_residuals_at(const CodecModel& model, const std::vector<Tensor>& images,
                           const std::vector<LatentPair>& latents);

/// One correlation histogram bin: [lo, hi) except the last bin, which is
/// closed at +1.
struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  int64_t count_side = 0;
  int64_t count_main = 0;
};

/// Width-0.05 bins spanning [-1, 1] over unflagged rows.
std::vector<HistogramBin> correlation_histogram(const std::vector<GainRow>& rows);

/// Gradient-correlation survey over a set of images and one model per
/// trade-off point, with per-image shift gains.
struct SurveyResult {
  std::vector<GainRow> rows;  // one per (image, model)
  std::vector<HistogramBin> histogram;
  // Aggregates over unflagged rows; NaN when undefined.
  double mean_corr_side = std::numeric_limits<double>::quiet_NaN();
  double mean_corr_main = std::numeric_limits<double>::quiet_NaN();
  // Survey-level Pearson between per-image psnr gain and corr_main.
  double gain_correlation = std::numeric_limits<double>::quiet_NaN();
  int64_t flagged_count = 0;
};

SurveyResult correlation_survey(const std::vector<Tensor>& images,
                                const std::vector<std::string>& image_ids,
                                const std::vector<CodecModel>& models);

/// CSV writers (deterministic row order; all throw DataError on I/O
/// failure).
void write_kkt_csv(const std::string& path,
                   const std::vector<std::pair<std::string, KKTReport>>& reports);
void write_histogram_csv(const std::string& path, const std::vector<HistogramBin>& bins);
void write_scatter_csv(const std::string& path, const std::vector<GainRow>& rows);

}  // namespace gsc
