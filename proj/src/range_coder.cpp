#include "gsc/range_coder.hpp"

#include <algorithm>

#include "gsc/errors.hpp"

namespace gsc {

namespace {

constexpr uint32_t kTop = 1u << 24;
constexpr uint32_t kBot = 1u << 16;
constexpr uint32_t kMask = 0xFFFFFFFFu;

// One renormalization step is due when the top byte of the interval is
// settled, or when the range has shrunk below the frequency precision (in
// which case it is clipped to the distance to the next 2^16 boundary, which
// is provably nonzero whenever this branch is reached).
inline bool renorm_due(uint64_t low, uint32_t& range) {
  const uint32_t lo32 = static_cast<uint32_t>(low);
  const uint32_t sum = lo32 + range;
  if ((lo32 ^ sum) < kTop) return true;
  if (range < kBot) {
    range = (0u - lo32) & (kBot - 1);
    return true;
  }
  return false;
}

void check_interval(uint32_t cum, uint32_t freq, uint32_t total) {
  if (total == 0 || total > kBot) {
    throw CoderError("range coder: total " + std::to_string(total) +
                     " outside (0, 2^16]");
  }
  if (freq == 0 || cum + freq > total) {
    throw CoderError("range coder: interval [" + std::to_string(cum) + ", " +
                     std::to_string(cum + freq) + ") invalid for total " +
                     std::to_string(total));
  }
}

}  // namespace

void RangeEncoder::encode(uint32_t cum, uint32_t freq, uint32_t total) {
  if (finished_) throw CoderError("range coder: encode after finish");
  check_interval(cum, freq, total);

  const uint32_t r = range_ / total;
  low_ = (low_ + static_cast<uint64_t>(cum) * r) & kMask;
  range_ = r * freq;

  while (renorm_due(low_, range_)) {
    out_.push_back(static_cast<uint8_t>(low_ >> 24));
    low_ = (low_ << 8) & kMask;
    range_ <<= 8;
  }
}

std::vector<uint8_t> RangeEncoder::finish() {
  if (finished_) throw CoderError("range coder: finish called twice");
  finished_ = true;
  for (int i = 0; i < 4; ++i) {
    out_.push_back(static_cast<uint8_t>(low_ >> 24));
    low_ = (low_ << 8) & kMask;
  }
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> payload) : in_(payload) {
  for (int i = 0; i < 4; ++i) code_ = ((code_ << 8) | next_byte()) & kMask;
}

uint8_t RangeDecoder::next_byte() {
  if (pos_ >= in_.size()) {
    throw FormatError("range payload truncated at byte " + std::to_string(pos_));
  }
  return in_[pos_++];
}

uint32_t RangeDecoder::decode_freq(uint32_t total) {
  if (total == 0 || total > kBot) {
    throw CoderError("range coder: total " + std::to_string(total) +
                     " outside (0, 2^16]");
  }
  range_ /= total;
  const uint32_t diff = static_cast<uint32_t>(code_) - static_cast<uint32_t>(low_);
  const uint32_t dv = diff / range_;
  if (dv >= total) {
    throw FormatError("range payload corrupt: position " + std::to_string(dv) +
                      " >= total " + std::to_string(total));
  }
  return dv;
}

void RangeDecoder::decode_update(uint32_t cum, uint32_t freq) {
  low_ = (low_ + static_cast<uint64_t>(cum) * range_) & kMask;
  range_ *= freq;

  while (renorm_due(low_, range_)) {
    code_ = ((code_ << 8) | next_byte()) & kMask;
    low_ = (low_ << 8) & kMask;
    range_ <<= 8;
  }
}

uint16_t RangeDecoder::decode_raw16() {
  const uint32_t dv = decode_freq(1u << 16);
  decode_update(dv, 1);
  return static_cast<uint16_t>(dv);
}

std::vector<uint8_t> encode_symbols(std::span<const int32_t> symbols,
                                    std::span<const DiscretePmf> pmfs) {
  if (symbols.size() != pmfs.size()) {
    throw CoderError("encode_symbols: " + std::to_string(symbols.size()) +
                     " symbols vs " + std::to_string(pmfs.size()) + " tables");
  }
  RangeEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i) {
    const int32_t v = symbols[i];
    const DiscretePmf& pmf = pmfs[i];
    if (pmf.contains(v)) {
      const size_t idx = static_cast<size_t>(v - pmf.min_symbol);
      enc.encode(pmf.cum[idx], pmf.freq[idx], DiscretePmf::kTotal);
    } else {
      if (v < INT16_MIN || v > INT16_MAX) {
        throw CoderError("encode_symbols: symbol " + std::to_string(v) +
                         " outside bypass range");
      }
      enc.encode(DiscretePmf::kTotal - DiscretePmf::kEscapeFreq,
                 DiscretePmf::kEscapeFreq, DiscretePmf::kTotal);
      enc.encode_raw16(static_cast<uint16_t>(static_cast<int16_t>(v)));
    }
  }
  return enc.finish();
}

std::vector<int32_t> decode_symbols(std::span<const uint8_t> payload,
                                    std::span<const DiscretePmf> pmfs) {
  RangeDecoder dec(payload);
  std::vector<int32_t> out;
  out.reserve(pmfs.size());
  for (const DiscretePmf& pmf : pmfs) {
    const uint32_t dv = dec.decode_freq(DiscretePmf::kTotal);
    if (dv >= DiscretePmf::kTotal - DiscretePmf::kEscapeFreq) {
      dec.decode_update(DiscretePmf::kTotal - DiscretePmf::kEscapeFreq,
                        DiscretePmf::kEscapeFreq);
      out.push_back(static_cast<int16_t>(dec.decode_raw16()));
    } else {
      const size_t idx = static_cast<size_t>(
          std::upper_bound(pmf.cum.begin(), pmf.cum.end(), dv) - pmf.cum.begin() - 1);
      dec.decode_update(pmf.cum[idx], pmf.freq[idx]);
      out.push_back(pmf.min_symbol + static_cast<int32_t>(idx));
    }
  }
  return out;
}

}  // namespace gsc
