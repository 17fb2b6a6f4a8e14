#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gsc/metrics.hpp"
#include "gsc/model.hpp"
#include "gsc/pipeline.hpp"
#include "gsc/tensor.hpp"

namespace gsc {

/// The four coding configurations under comparison: plain rounding,
/// decoder-side shifts, per-image latent refinement, and both combined.
enum class EvalMode { kBaseline, kShift, kFinetune, kFinetuneShift };
inline constexpr EvalMode kAllEvalModes[] = {EvalMode::kBaseline, EvalMode::kShift,
                                             EvalMode::kFinetune, EvalMode::kFinetuneShift};
const char* eval_mode_name(EvalMode mode);

struct EvalOptions {
  bool with_finetune = true;   // include the two refinement modes
  int finetune_iterations = 100;
  uint64_t seed = 1;           // refinement noise streams derive from this
};

/// One coded image under one mode and one trade-off point.
struct ImageResult {
  std::string image_id;
  EvalMode mode = EvalMode::kBaseline;
  int lambda_index = 0;
  double bpp = 0.0;   // 8 * container bytes / pixels
  double psnr = 0.0;  // dB
};

/// Per-mode summary: one rate/distortion point per trade-off index (mean
/// bpp and mean psnr over the image set), plus the rate difference against
/// the baseline mode when enough points exist for the fit (NaN otherwise).
struct ModeCurve {
  EvalMode mode = EvalMode::kBaseline;
  RDCurve curve;
  double bd_vs_baseline = std::numeric_limits<double>::quiet_NaN();
};

struct EvalReport {
  std::vector<ImageResult> per_image;
  std::vector<ModeCurve> modes;
};

/// Runs every requested mode over every (model, image) pair. Models must
/// have distinct trade-off indices (ConfigError otherwise) and are ordered
/// by index; images must be non-empty with one id each (DataError).
EvalReport evaluate(const std::vector<CodecModel>& models, const std::vector<Tensor>& images,
                    const std::vector<std::string>& image_ids, const EvalOptions& opts);

void write_rd_csv(const std::string& path, const EvalReport& report);
void write_per_image_csv(const std::string& path, const EvalReport& report);
void write_bd_csv(const std::string& path, const EvalReport& report);

/// Single-threaded wall-time ratios plus exact pass counters, accumulated
/// over the image set.
struct ComplexityRecord {
  double base_encode_seconds = 0.0;
  double shift_encode_seconds = 0.0;
  double finetune_encode_seconds = 0.0;
  double base_decode_seconds = 0.0;
  double shift_decode_seconds = 0.0;
  double encode_shift_ratio = 0.0;     // shift encode / baseline encode
  double encode_finetune_ratio = 0.0;  // refine-then-encode / baseline encode
  double decode_overhead_pct = 0.0;    // shift decode vs baseline decode
  int finetune_iterations = 0;
  PassCounters base_encode_passes;
  PassCounters shift_encode_passes;
  PassCounters base_decode_passes;
  PassCounters shift_decode_passes;
};

ComplexityRecord measure_complexity(const CodecModel& model, const std::vector<Tensor>& images,
                                    int finetune_iterations);

void write_complexity_csv(const std::string& path, const ComplexityRecord& record);

}  // namespace gsc
