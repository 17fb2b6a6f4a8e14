#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gsc/entropy.hpp"

namespace gsc {

/// Carry-less byte-oriented range encoder (Subbotin style): 64-bit low
/// register masked to 32 bits, 32-bit range, cumulative-frequency totals up
/// to 2^16. Integer-only, so payloads are identical across platforms.
class RangeEncoder {
 public:
  RangeEncoder() = default;

  /// Code one symbol occupying [cum, cum + freq) out of total.
  void encode(uint32_t cum, uint32_t freq, uint32_t total);

  /// Code 16 raw bits (a 1/2^16 slice); used for escape bypass payloads.
  void encode_raw16(uint16_t v) { encode(v, 1, 1u << 16); }

  /// Flush the low register and hand over the payload. The encoder is
  /// finished afterwards; further encode calls throw.
  std::vector<uint8_t> finish();

 private:
  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  bool finished_ = false;
  std::vector<uint8_t> out_;
};

/// Matching decoder. Reads exactly the bytes the encoder produced when
/// driven with the same frequency tables; overruns throw FormatError.
class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> payload);

  /// Cumulative-frequency position of the next symbol, in [0, total).
  uint32_t decode_freq(uint32_t total);

  /// Consume the symbol previously identified via decode_freq.
  void decode_update(uint32_t cum, uint32_t freq);

  uint16_t decode_raw16();

  size_t consumed() const { return pos_; }

 private:
  uint8_t next_byte();

  uint64_t low_ = 0;
  uint64_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

/// Code a symbol sequence against per-symbol frequency tables. Symbols
/// outside their table's support are escape-coded followed by a signed
/// 16-bit raw bypass; values beyond int16 range throw CoderError.
std::vector<uint8_t> encode_symbols(std::span<const int32_t> symbols,
                                    std::span<const DiscretePmf> pmfs);

/// Exact inverse of encode_symbols given identical tables.
std::vector<int32_t> decode_symbols(std::span<const uint8_t> payload,
                                    std::span<const DiscretePmf> pmfs);

}  // namespace gsc
