#include "gsc/cli.hpp"

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "gsc/analysis.hpp"
#include "gsc/bytes.hpp"
#include "gsc/config.hpp"
#include "gsc/errors.hpp"
#include "gsc/eval.hpp"
#include "gsc/image.hpp"
#include "gsc/metrics.hpp"
#include "gsc/model.hpp"
#include "gsc/pipeline.hpp"
#include "gsc/train.hpp"

namespace gsc {
namespace {

namespace fs = std::filesystem;

std::string checkpoint_path(const std::string& dir, int lambda_index) {
  return (fs::path(dir) / ("model_" + std::to_string(lambda_index) + ".gsc")).string();
}

/// A checkpoint the user asked for but never trained is a setup problem, not
/// a data problem, so it maps to the configuration exit code.
CodecModel load_checkpoint(const std::string& dir, int lambda_index) {
  const std::string path = checkpoint_path(dir, lambda_index);
  if (!fs::exists(path)) {
    throw ConfigError("missing checkpoint for trade-off index " + std::to_string(lambda_index) +
                      ": " + path + " (run `train` first)");
  }
  return load_model(path);
}

std::vector<int> lambda_selection(int single_index) {
  if (single_index >= 0) return {single_index};
  std::vector<int> all;
  for (int k = 0; k < kLambdaCount; ++k) all.push_back(k);
  return all;
}

std::vector<CodecModel> load_checkpoints(const std::string& dir, int single_index) {
  std::vector<CodecModel> models;
  for (int k : lambda_selection(single_index)) models.push_back(load_checkpoint(dir, k));
  return models;
}

void write_trajectory_csv(const std::string& path, const std::vector<double>& trajectory) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.precision(12);
  out << "iteration,loss\n";
  for (size_t i = 0; i < trajectory.size(); ++i) out << i << "," << trajectory[i] << "\n";
}

/// Options shared by every subcommand; config-file values are applied first,
/// then explicit flags override them.
struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  int lambda_index = -1;  // -1 selects the full grid where that makes sense
};

void add_common(CLI::App* cmd, CommonArgs* args, bool with_lambda) {
  cmd->add_option("--config", args->config_path, "key = value settings file");
  cmd->add_option("--out", args->out_dir, "output directory (default: config out_dir)");
  cmd->add_option("--seed", args->seed, "RNG seed override");
  if (with_lambda) {
    cmd->add_option("--lambda-index", args->lambda_index, "trade-off point index")
        ->check(CLI::Range(0, kLambdaCount - 1));
  }
}

Config resolve_config(const CLI::App* cmd, const CommonArgs& args) {
  Config cfg = args.config_path.empty() ? Config{} : load_config(args.config_path);
  if (cmd->count("--out") > 0) cfg.out_dir = args.out_dir;
  if (cmd->count("--seed") > 0) cfg.seed = args.seed;
  return cfg;
}

std::vector<Tensor> load_required_dir(const std::string& dir, const char* role,
                                      std::vector<std::string>* ids) {
  if (dir.empty()) throw ConfigError(std::string(role) + " directory not set (config or flag)");
  return load_image_dir(dir, ids);
}

int cmd_train(const CLI::App* cmd, const CommonArgs& args) {
  Config cfg = resolve_config(cmd, args);
  std::vector<Tensor> images = load_required_dir(cfg.train_dir, "train_dir", nullptr);
  fs::create_directories(cfg.out_dir);
  for (int k : lambda_selection(args.lambda_index)) {
    TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.final_lr_scale = cfg.final_lr_scale;
    tc.batch_size = cfg.batch_size;
    tc.iterations = cfg.iterations;
    tc.lambda_indices = {k};
    tc.seed = cfg.seed;  // shared across the grid so the initializations match
    tc.dataset_path = cfg.train_dir;
    TrainResult result = train_single(tc, images, k);
    const std::string model_path = checkpoint_path(cfg.out_dir, k);
    save_model(model_path, result.model);
    write_trajectory_csv(
        (fs::path(cfg.out_dir) / ("train_trajectory_" + std::to_string(k) + ".csv")).string(),
        result.trajectory);
    const std::vector<double> smooth = smoothed_trajectory(result.trajectory, 100);
    std::cout << "trained lambda_index=" << k << " lambda=" << kLambdaGrid[k]
              << " iterations=" << tc.iterations << " final_loss=" << smooth.back() << " -> "
              << model_path << "\n";
  }
  return 0;
}

int cmd_encode(const CLI::App* cmd, const CommonArgs& args, const std::string& input,
               const std::string& output, bool no_shift, int finetune_iters) {
  Config cfg = resolve_config(cmd, args);
  const Tensor x = read_ppm(input);
  const CodecModel model = load_checkpoint(cfg.out_dir, args.lambda_index);
  EncodeResult enc;
  if (finetune_iters > 0) {
    const FinetuneResult ft = finetune_latents(model, x, finetune_iters, cfg.seed);
    enc = encode_with_latents(model, x, !no_shift, ft.latents);
  } else {
    enc = encode_image(model, x, !no_shift);
  }
  write_file_bytes(output, enc.bytes);
  const double npix = static_cast<double>(enc.stream.width) * enc.stream.height;
  std::cout << "encoded " << input << " -> " << output << " bytes=" << enc.bytes.size()
            << " bpp=" << (8.0 * static_cast<double>(enc.bytes.size()) / npix)
            << " psnr_db=" << psnr_from_mse255(enc.distortion)
            << " rho_f_index=" << enc.stream.rho_f_index
            << " rho_h_index=" << enc.stream.rho_h_index << "\n";
  return 0;
}

int cmd_decode(const CLI::App* cmd, const CommonArgs& args, const std::string& input,
               const std::string& output) {
  Config cfg = resolve_config(cmd, args);
  const std::vector<uint8_t> bytes = read_file_bytes(input);
  const Bitstream stream = parse_bitstream(bytes);
  const CodecModel model = load_checkpoint(cfg.out_dir, stream.lambda_index);
  const DecodeResult dec = decode_image(model, bytes);
  write_ppm(output, dec.reconstruction);
  std::cout << "decoded " << input << " -> " << output << " width=" << stream.width
            << " height=" << stream.height << " lambda_index=" << stream.lambda_index
            << " rho_f_index=" << stream.rho_f_index << " rho_h_index=" << stream.rho_h_index
            << "\n";
  return 0;
}

int cmd_eval(const CLI::App* cmd, const CommonArgs& args, int finetune_iters) {
  Config cfg = resolve_config(cmd, args);
  if (cmd->count("--finetune-iters") > 0) cfg.finetune_iterations = finetune_iters;
  std::vector<std::string> ids;
  std::vector<Tensor> images = load_required_dir(cfg.eval_dir, "eval_dir", &ids);
  std::vector<CodecModel> models = load_checkpoints(cfg.out_dir, args.lambda_index);
  EvalOptions opts;
  opts.finetune_iterations = cfg.finetune_iterations;
  opts.with_finetune = cfg.finetune_iterations > 0;
  opts.seed = cfg.seed;
  const EvalReport report = evaluate(models, images, ids, opts);
  fs::create_directories(cfg.out_dir);
  write_rd_csv((fs::path(cfg.out_dir) / "rd_curves.csv").string(), report);
  write_per_image_csv((fs::path(cfg.out_dir) / "per_image.csv").string(), report);
  write_bd_csv((fs::path(cfg.out_dir) / "bd_rates.csv").string(), report);
  std::cout.precision(6);
  for (const ModeCurve& mc : report.modes) {
    std::cout << eval_mode_name(mc.mode) << ":";
    for (const RDPoint& p : mc.curve.points)
      std::cout << " (" << p.bpp << " bpp, " << p.psnr << " dB)";
    if (mc.mode != EvalMode::kBaseline && !std::isnan(mc.bd_vs_baseline))
      std::cout << " bd_vs_baseline=" << mc.bd_vs_baseline << "%";
    std::cout << "\n";
  }
  return 0;
}

int cmd_analyze(const CLI::App* cmd, const CommonArgs& args) {
  Config cfg = resolve_config(cmd, args);
  std::vector<std::string> ids;
  std::vector<Tensor> images = load_required_dir(cfg.eval_dir, "eval_dir", &ids);
  std::vector<CodecModel> models = load_checkpoints(cfg.out_dir, args.lambda_index);
  fs::create_directories(cfg.out_dir);

  const SurveyResult survey = correlation_survey(images, ids, models);
  write_gain_csv((fs::path(cfg.out_dir) / "corr_records.csv").string(), survey.rows);
  write_histogram_csv((fs::path(cfg.out_dir) / "histogram.csv").string(), survey.histogram);
  write_scatter_csv((fs::path(cfg.out_dir) / "scatter.csv").string(), survey.rows);

  // Stationarity is a property of the training objective, so prefer the
  // training images when the config names them.
  std::vector<Tensor> kkt_images =
      cfg.train_dir.empty() ? images : load_image_dir(cfg.train_dir, nullptr);
  std::vector<std::pair<std::string, KKTReport>> kkt_rows;
  for (const CodecModel& model : models) {
    kkt_rows.emplace_back("lambda_" + std::to_string(model.lambda_index),
                          kkt_residuals(model, kkt_images));
  }
  write_kkt_csv((fs::path(cfg.out_dir) / "kkt_report.csv").string(), kkt_rows);

  std::cout.precision(6);
  std::cout << "records=" << survey.rows.size() << " flagged=" << survey.flagged_count
            << " mean_corr_side=" << survey.mean_corr_side
            << " mean_corr_main=" << survey.mean_corr_main
            << " gain_correlation=" << survey.gain_correlation << "\n";
  for (const auto& [label, report] : kkt_rows) {
    std::cout << label << ": residual_side=" << report.residual_side
              << " residual_main=" << report.residual_main << " samples=" << report.sample_count
              << "\n";
  }
  return 0;
}

int cmd_complexity(const CLI::App* cmd, const CommonArgs& args, int finetune_iters) {
  Config cfg = resolve_config(cmd, args);
  if (cmd->count("--finetune-iters") > 0) cfg.finetune_iterations = finetune_iters;
  std::vector<Tensor> images = load_required_dir(cfg.eval_dir, "eval_dir", nullptr);
  const int index = args.lambda_index >= 0 ? args.lambda_index : 1;
  const CodecModel model = load_checkpoint(cfg.out_dir, index);
  const ComplexityRecord rec = measure_complexity(model, images, cfg.finetune_iterations);
  fs::create_directories(cfg.out_dir);
  write_complexity_csv((fs::path(cfg.out_dir) / "complexity.csv").string(), rec);
  std::cout.precision(6);
  std::cout << "images=" << images.size() << " lambda_index=" << index
            << " encode_shift_ratio=" << rec.encode_shift_ratio
            << " encode_finetune_ratio=" << rec.encode_finetune_ratio << " (at "
            << rec.finetune_iterations << " iters)"
            << " decode_overhead_pct=" << rec.decode_overhead_pct << "\n";
  std::cout << "shift encode extra passes: h_s=+"
            << (rec.shift_encode_passes.h_s - rec.base_encode_passes.h_s) << " g_s=+"
            << (rec.shift_encode_passes.g_s - rec.base_encode_passes.g_s) << " grad_evals=+"
            << (rec.shift_encode_passes.grad_evals - rec.base_encode_passes.grad_evals) << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Learned image codec with decoder-side entropy-gradient latent shifts"};
  app.require_subcommand(1);

  CommonArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train one model per trade-off point");
  add_common(train, &train_args, true);

  CommonArgs enc_args;
  std::string enc_in, enc_out;
  bool enc_no_shift = false;
  int enc_finetune = 0;
  CLI::App* encode = app.add_subcommand("encode", "Compress a PPM image to a .gsls stream");
  encode->add_option("input", enc_in, "source .ppm image")->required();
  encode->add_option("output", enc_out, "destination .gsls stream")->required();
  add_common(encode, &enc_args, true);
  encode->get_option("--lambda-index")->required();
  encode->add_flag("--no-shift", enc_no_shift, "disable the shift search");
  encode->add_option("--finetune-iters", enc_finetune, "refine latents before coding")
      ->check(CLI::NonNegativeNumber);

  CommonArgs dec_args;
  std::string dec_in, dec_out;
  CLI::App* decode = app.add_subcommand("decode", "Reconstruct a PPM image from a .gsls stream");
  decode->add_option("input", dec_in, "source .gsls stream")->required();
  decode->add_option("output", dec_out, "destination .ppm image")->required();
  add_common(decode, &dec_args, false);

  CommonArgs eval_args;
  int eval_finetune = 0;
  CLI::App* eval = app.add_subcommand("eval", "Rate-distortion curves and BD-rate deltas");
  add_common(eval, &eval_args, true);
  eval->add_option("--finetune-iters", eval_finetune, "latent refinement budget (0 disables)")
      ->check(CLI::NonNegativeNumber);

  CommonArgs analyze_args;
  CLI::App* analyze =
      app.add_subcommand("analyze", "Gradient-correlation survey and stationarity residuals");
  add_common(analyze, &analyze_args, true);

  CommonArgs cx_args;
  int cx_finetune = 0;
  CLI::App* complexity = app.add_subcommand("complexity", "Pass counts and wall-clock ratios");
  add_common(complexity, &cx_args, true);
  complexity->add_option("--finetune-iters", cx_finetune, "refinement budget to time")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train(train, train_args);
    if (encode->parsed())
      return cmd_encode(encode, enc_args, enc_in, enc_out, enc_no_shift, enc_finetune);
    if (decode->parsed()) return cmd_decode(decode, dec_args, dec_in, dec_out);
    if (eval->parsed()) return cmd_eval(eval, eval_args, eval_finetune);
    if (analyze->parsed()) return cmd_analyze(analyze, analyze_args);
    if (complexity->parsed()) return cmd_complexity(complexity, cx_args, cx_finetune);
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const CoderError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gsc
