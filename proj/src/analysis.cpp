#include "gsc/analysis.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

#include "gsc/entropy.hpp"
#include "gsc/errors.hpp"
#include "gsc/metrics.hpp"
#include "gsc/pipeline.hpp"

namespace gsc {

double pearson(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "correlation inputs");
  const int64_t n = a.size();
  if (n < 2) throw DimensionError("pearson: need at least 2 elements");
  double mean_a = 0.0, mean_b = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) {
    throw EvalError("pearson: zero variance, correlation undefined");
  }
  return cov / std::sqrt(var_a * var_b);
}

namespace {

/// The four per-image gradient terms of the two stationarity conditions,
/// in the trained objective's own scale (per-pixel bits; weighted
/// 8-bit-scale distortion). Rate gradients take the latent pair as free
/// variables, matching how refinement and shifting treat them.
struct GradPieces {
  Tensor side_rate;  // d(side bits)/dz
  Tensor side_main;  // d(main bits)/dz, through the conditioning head
  Tensor main_rate;  // d(main bits)/dy
  Tensor main_dist;  // lambda * d(distortion)/dy
};

GradPieces gradient_pieces(const CodecModel& model, const Tensor& x, const Tensor& y,
                           const Tensor& z) {
  const double npix = static_cast<double>(x.dim(0)) * static_cast<double>(x.dim(1));
  GradPieces out;

  out.side_rate = scaled(factorized_bits_eval(model.side_prior, z).d_latents, 1.0 / npix);
  out.side_main = scaled(grad_main_bits_wrt_side(model, y, z), 1.0 / npix);

  const Conditioning cond = conditioning_split(stack_forward(model.hyper_synthesis, z));
  out.main_rate = scaled(gaussian_bits_eval(y, cond.mu, cond.sigma).d_latents, 1.0 / npix);

  // Distortion term exactly as trained: unclamped synthesis output against
  // the source, on the 8-bit scale.
  const StackTrace synth = stack_forward_traced(model.synthesis, y);
  require_same_shape(synth.output, x, "synthesized image");
  Tensor d_xhat(x.shape());
  const double w = model.lambda * 65025.0 * 2.0 / static_cast<double>(x.size());
  for (int64_t i = 0; i < x.size(); ++i) d_xhat[i] = w * (synth.output[i] - x[i]);
  out.main_dist = stack_input_grad(model.synthesis, synth, d_xhat);
  return out;
}

void check_image_shape(const Tensor& x) {
  if (x.rank() != 3 || x.dim(2) != 3) {
    throw DataError("analysis: expected (h,w,3) images, got " + x.shape_str());
  }
}

}  // namespace

KKTReport kkt_residuals_at(const CodecModel& model, const std::vector<Tensor>& images,
                           const std::vector<LatentPair>& latents) {
  model.validate();
  if (images.empty()) throw DataError("kkt residuals: empty dataset");
  if (latents.size() != images.size()) {
    throw DataError("kkt residuals: need one latent pair per image");
  }

  Tensor sum_z, mag_z, sum_y, mag_y;
  for (size_t i = 0; i < images.size(); ++i) {
    const Tensor& x = images[i];
    check_image_shape(x);
    if (!x.same_shape(images[0])) {
      throw DataError("kkt residuals: images must share one size to be averaged");
    }
    GradPieces g = gradient_pieces(model, x, latents[i].y, latents[i].z);
    if (i == 0) {
      sum_z = Tensor(g.side_rate.shape());
      mag_z = Tensor(g.side_rate.shape());
      sum_y = Tensor(g.main_rate.shape());
      mag_y = Tensor(g.main_rate.shape());
    }
    axpy(sum_z, 1.0, g.side_rate);
    axpy(sum_z, 1.0, g.side_main);
    axpy(sum_y, 1.0, g.main_rate);
    axpy(sum_y, 1.0, g.main_dist);
    for (int64_t k = 0; k < mag_z.size(); ++k) {
      mag_z[k] += std::abs(g.side_rate[k]) + std::abs(g.side_main[k]);
    }
    for (int64_t k = 0; k < mag_y.size(); ++k) {
      mag_y[k] += std::abs(g.main_rate[k]) + std::abs(g.main_dist[k]);
    }
  }

  const double denom_z = l2_norm(mag_z);
  const double denom_y = l2_norm(mag_y);
  if (denom_z == 0.0 || denom_y == 0.0) {
    throw EvalError("kkt residuals: zero gradient magnitude, defect undefined");
  }
  KKTReport report;
  report.residual_side = l2_norm(sum_z) / denom_z;
  report.residual_main = l2_norm(sum_y) / denom_y;
  report.sample_count = static_cast<int64_t>(images.size());
  return report;
}

KKTReport kkt_residuals(const CodecModel& model, const std::vector<Tensor>& images) {
  std::vector<LatentPair> latents;
  latents.reserve(images.size());
  for (const Tensor& x : images) {
    check_image_shape(x);
    LatentPair pair;
    pair.y = stack_forward(model.analysis, x);
    pair.z = stack_forward(model.hyper_analysis, pair.y);
    pair.state = LatentState::kContinuous;
    latents.push_back(std::move(pair));
  }
  return kkt_residuals_at(model, images, latents);
}

std::vector<GainRow> shift_gain_report(const std::vector<Tensor>& images,
                                       const std::vector<std::string>& image_ids,
                                       const std::vector<CodecModel>& models) {
  if (images.size() != image_ids.size()) {
    throw DataError("gain report: need one id per image");
  }
  if (models.empty()) throw ConfigError("gain report: no models supplied");

  std::vector<GainRow> rows;
  rows.reserve(models.size() * images.size());
  for (const CodecModel& model : models) {
    model.validate();
    for (size_t i = 0; i < images.size(); ++i) {
      const Tensor& x = images[i];
      EncodeResult base = encode_image(model, x, false);
      EncodeResult shift = encode_image(model, x, true);
      const double npix = static_cast<double>(x.dim(0)) * static_cast<double>(x.dim(1));

      GainRow row;
      row.image_id = image_ids[i];
      row.lambda = model.lambda;
      row.bpp_base = 8.0 * static_cast<double>(base.bytes.size()) / npix;
      row.bpp_shift = 8.0 * static_cast<double>(shift.bytes.size()) / npix;
      row.psnr_base = psnr_from_mse255(base.distortion);
      row.psnr_shift = psnr_from_mse255(shift.distortion);
      row.rho_f_idx = shift.stream.rho_f_index;
      row.rho_h_idx = shift.stream.rho_h_index;

      // Correlations at the deployed (rounded) latents.
      Tensor y_cont = stack_forward(model.analysis, x);
      Tensor z_hat = quantize_round(stack_forward(model.hyper_analysis, y_cont));
      Tensor y_hat = quantize_round(y_cont);
      GradPieces g = gradient_pieces(model, x, y_hat, z_hat);
      try {
        row.corr_side = pearson(g.side_rate, g.side_main);
        row.corr_main = pearson(g.main_rate, g.main_dist);
      } catch (const EvalError&) {
        row.flagged = true;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<HistogramBin> correlation_histogram(const std::vector<GainRow>& rows) {
  const int bins = 40;  // width 0.05 over [-1, 1]
  std::vector<HistogramBin> hist(bins);
  for (int b = 0; b < bins; ++b) {
    hist[static_cast<size_t>(b)].lo = -1.0 + 0.05 * b;
    hist[static_cast<size_t>(b)].hi = -1.0 + 0.05 * (b + 1);
  }
  auto bin_of = [&](double r) {
    int b = static_cast<int>(std::floor((r + 1.0) / 0.05));
    return std::min(std::max(b, 0), bins - 1);
  };
  for (const GainRow& row : rows) {
    if (row.flagged) continue;
    hist[static_cast<size_t>(bin_of(row.corr_side))].count_side += 1;
    hist[static_cast<size_t>(bin_of(row.corr_main))].count_main += 1;
  }
  return hist;
}

SurveyResult correlation_survey(const std::vector<Tensor>& images,
                                const std::vector<std::string>& image_ids,
                                const std::vector<CodecModel>& models) {
  SurveyResult survey;
  survey.rows = shift_gain_report(images, image_ids, models);
  survey.histogram = correlation_histogram(survey.rows);

  std::vector<double> gains, corrs;
  double sum_side = 0.0, sum_main = 0.0;
  for (const GainRow& row : survey.rows) {
    if (row.flagged) {
      survey.flagged_count += 1;
      continue;
    }
    sum_side += row.corr_side;
    sum_main += row.corr_main;
    gains.push_back(row.psnr_shift - row.psnr_base);
    corrs.push_back(row.corr_main);
  }
  const size_t n = gains.size();
  if (n > 0) {
    survey.mean_corr_side = sum_side / static_cast<double>(n);
    survey.mean_corr_main = sum_main / static_cast<double>(n);
  }
  if (n >= 2) {
    Tensor g({static_cast<int>(n)});
    Tensor c({static_cast<int>(n)});
    for (size_t i = 0; i < n; ++i) {
      g[static_cast<int64_t>(i)] = gains[i];
      c[static_cast<int64_t>(i)] = corrs[i];
    }
    try {
      survey.gain_correlation = pearson(g, c);
    } catch (const EvalError&) {
      // Degenerate survey (e.g. identical gains); leave NaN.
    }
  }
  return survey;
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << std::setprecision(12);
  return out;
}

}  // namespace

void write_kkt_csv(const std::string& path,
                   const std::vector<std::pair<std::string, KKTReport>>& reports) {
  std::ofstream out = open_csv(path);
  out << "label,residual_side,residual_main,sample_count\n";
  for (const auto& [label, report] : reports) {
    out << label << ',' << report.residual_side << ',' << report.residual_main << ','
        << report.sample_count << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

void write_histogram_csv(const std::string& path, const std::vector<HistogramBin>& bins) {
  std::ofstream out = open_csv(path);
  out << "bin_lo,bin_hi,count_side,count_main\n";
  for (const HistogramBin& b : bins) {
    out << b.lo << ',' << b.hi << ',' << b.count_side << ',' << b.count_main << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

void write_scatter_csv(const std::string& path, const std::vector<GainRow>& rows) {
  std::ofstream out = open_csv(path);
  out << "image_id,lambda,corr_main,psnr_gain_db\n";
  for (const GainRow& row : rows) {
    if (row.flagged) continue;
    out << row.image_id << ',' << row.lambda << ',' << row.corr_main << ','
        << (row.psnr_shift - row.psnr_base) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

void write_gain_csv(const std::string& path, const std::vector<GainRow>& rows) {
  std::ofstream out = open_csv(path);
  out << "image_id,lambda,bpp_base,bpp_shift,psnr_base,psnr_shift,rho_f_idx,rho_h_idx,"
         "corr_side,corr_main,flagged\n";
  for (const GainRow& row : rows) {
    out << row.image_id << ',' << row.lambda << ',' << row.bpp_base << ',' << row.bpp_shift
        << ',' << row.psnr_base << ',' << row.psnr_shift << ',' << row.rho_f_idx << ','
        << row.rho_h_idx << ',' << row.corr_side << ',' << row.corr_main << ','
        << (row.flagged ? 1 : 0) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace gsc
