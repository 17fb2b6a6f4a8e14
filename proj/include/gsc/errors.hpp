#pragma once

#include <stdexcept>
#include <string>

namespace gsc {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor/layer shape mismatch. Message always reports both shapes.
struct DimensionError : Error {
  using Error::Error;
};

/// Malformed or corrupt on-disk artifact (bitstream, checkpoint).
struct FormatError : Error {
  using Error::Error;
};

/// Invalid input data (images, datasets, symbol ranges).
struct DataError : Error {
  using Error::Error;
};

/// Bad configuration file or CLI usage.
struct ConfigError : Error {
  using Error::Error;
};

/// Training failure (divergence, non-finite gradients).
struct TrainError : Error {
  using Error::Error;
};

/// Evaluation/analysis failure (degenerate statistics, empty sets).
struct EvalError : Error {
  using Error::Error;
};

/// Entropy coder misuse or internal invariant violation.
struct CoderError : Error {
  using Error::Error;
};

}  // namespace gsc
