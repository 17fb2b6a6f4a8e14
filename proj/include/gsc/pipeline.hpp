#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gsc/bitstream.hpp"
#include "gsc/model.hpp"
#include "gsc/shift.hpp"

namespace gsc {

/// Instrumented network-pass counts for the complexity contract.
struct PassCounters {
  int64_t g_a = 0;        // analysis passes
  int64_t g_s = 0;        // synthesis passes
  int64_t h_a = 0;        // hyper-analysis passes
  int64_t h_s = 0;        // hyper-synthesis passes
  int64_t grad_evals = 0; // entropy-gradient evaluations
};

struct EncodeResult {
  Bitstream stream;
  std::vector<uint8_t> bytes;  // serialized container
  Tensor reconstruction;       // clamped; equals the decoder's output
  ShiftDecision decision;
  double main_bits_estimate = 0.0;  // continuous-model estimate at the
  double side_bits_estimate = 0.0;  // coding distributions, in bits
  double main_coded_bits = 0.0;     // exact table cost of emitted symbols
  double baseline_main_coded_bits = 0.0;  // same, at shift step 0
  double distortion = 0.0;                // 8-bit-scale MSE of reconstruction
  double baseline_distortion = 0.0;       // same, at shift step 0
  PassCounters counters;
};

/// Full encoder: analysis transforms, rounding, optional two-stage shift
/// search, range coding, container serialization. The reconstruction
/// simulates the decoder exactly.
EncodeResult encode_image(const CodecModel& model, const Tensor& x, bool shift_enabled);

/// Encoder from externally supplied rounded latents (e.g. refined ones);
/// skips the analysis transforms.
EncodeResult encode_with_latents(const CodecModel& model, const Tensor& x, bool shift_enabled,
                                 const LatentPair& latents);

struct DecodeResult {
  Tensor reconstruction;  // clamped
  Bitstream stream;       // parsed header and payloads
  PassCounters counters;
};

/// Decoder: parse, side decode, side shift, condition, main decode, main
/// shift, synthesize. Throws FormatError on malformed containers and
/// DataError when the stream does not match the model's trade-off index.
DecodeResult decode_image(const CodecModel& model, std::span<const uint8_t> bytes);

/// Per-element side-latent coding tables from the per-channel prior, for a
/// latent grid of the given shape (rank 3, channels last).
std::vector<DiscretePmf> side_pmfs(const FactorizedModel& prior, const std::vector<int>& shape);

}  // namespace gsc
