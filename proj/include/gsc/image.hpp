#pragma once

#include <string>
#include <vector>

#include "gsc/rng.hpp"
#include "gsc/tensor.hpp"

namespace gsc {

/// Images are (height, width, 3) tensors with values in [0, 1].

/// Reads a binary 8-bit PPM (P6). Throws DataError on malformed files.
Tensor read_ppm(const std::string& path);

/// Writes a binary 8-bit PPM; values are clamped and rounded to 8 bits.
void write_ppm(const std::string& path, const Tensor& image);

/// Reads every `.ppm` in a directory, sorted by filename for determinism.
/// Fills `ids` (bare filenames) when non-null. Throws DataError when the
/// directory is missing or holds no PPM files.
std::vector<Tensor> load_image_dir(const std::string& dir, std::vector<std::string>* ids);

/// Elementwise clamp to [0, 1].
Tensor clamp01(const Tensor& t);

/// Deterministic synthetic photograph-like image: a low-frequency random
/// field (amplitude falling with spatial frequency) shared across channels
/// plus per-channel tinting and mild texture noise.
Tensor synth_image(int height, int width, Rng& rng);

}  // namespace gsc
