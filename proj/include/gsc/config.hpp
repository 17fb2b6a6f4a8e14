#pragma once

#include <cstdint>
#include <string>

#include "gsc/bitstream.hpp"

namespace gsc {

/// Tool configuration, read from a key-value text file. Lines look like
/// `key = value`; `#` starts a comment; blank lines are ignored. Unknown
/// keys are rejected so typos fail loudly (ConfigError). Documented keys:
///
///   train_dir            directory of training images (binary PPM)
///   eval_dir             directory of held-out images (binary PPM)
///   out_dir              outputs: checkpoints and CSV reports
///   iterations           training iterations per trade-off point
///   learning_rate        initial step size
///   final_lr_scale       end-of-training step-size fraction, in (0, 1]
///   batch_size           images averaged per training iteration
///   finetune_iterations  per-image refinement iterations for eval
///   seed                 root seed for every stochastic component
///   step_table_version   expected wire-format version (must match build)
struct Config {
  std::string train_dir;
  std::string eval_dir;
  std::string out_dir = ".";
  int iterations = 2000;
  double learning_rate = 3e-3;
  double final_lr_scale = 0.05;
  int batch_size = 1;
  int finetune_iterations = 100;
  uint64_t seed = 1;
  int step_table_version = kFormatVersion;
};

/// Parses configuration text. Throws ConfigError on unknown keys, missing
/// '=', unparseable numbers, or a step-table version this build does not
/// implement.
Config parse_config_text(const std::string& text);

/// Reads and parses a config file; ConfigError when unreadable.
Config load_config(const std::string& path);

}  // namespace gsc
