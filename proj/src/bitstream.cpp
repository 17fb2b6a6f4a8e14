#include "gsc/bitstream.hpp"

#include <string>

#include "gsc/bytes.hpp"
#include "gsc/errors.hpp"
#include "gsc/model.hpp"

namespace gsc {

namespace {
constexpr char kMagic[4] = {'G', 'S', 'L', 'S'};
}

std::vector<uint8_t> serialize_bitstream(const Bitstream& bs) {
  if (bs.width <= 0 || bs.width > 0xFFFF || bs.height <= 0 || bs.height > 0xFFFF) {
    throw FormatError("bitstream: image dimensions do not fit 16-bit fields");
  }
  if (bs.lambda_index < 0 || bs.lambda_index >= kLambdaCount) {
    throw FormatError("bitstream: lambda index out of range");
  }
  if (bs.rho_f_index < 0 || bs.rho_f_index >= kShiftIndexCount || bs.rho_h_index < 0 ||
      bs.rho_h_index >= kShiftIndexCount) {
    throw FormatError("bitstream: shift index out of range");
  }
  if (bs.side_payload.size() > 0xFFFFFFFFull || bs.main_payload.size() > 0xFFFFFFFFull) {
    throw FormatError("bitstream: payload exceeds 32-bit length field");
  }

  std::vector<uint8_t> out;
  out.reserve(kBitstreamHeaderBytes + bs.side_payload.size() + bs.main_payload.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u8(out, kFormatVersion);
  put_u16(out, static_cast<uint16_t>(bs.width));
  put_u16(out, static_cast<uint16_t>(bs.height));
  put_u8(out, static_cast<uint8_t>(bs.lambda_index));
  put_u8(out, static_cast<uint8_t>(bs.rho_f_index));
  put_u8(out, static_cast<uint8_t>(bs.rho_h_index));
  put_u32(out, static_cast<uint32_t>(bs.side_payload.size()));
  out.insert(out.end(), bs.side_payload.begin(), bs.side_payload.end());
  put_u32(out, static_cast<uint32_t>(bs.main_payload.size()));
  out.insert(out.end(), bs.main_payload.begin(), bs.main_payload.end());
  return out;
}

Bitstream parse_bitstream(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  for (char c : kMagic) {
    if (r.u8() != static_cast<uint8_t>(c)) throw FormatError("bitstream: bad magic");
  }
  const uint8_t version = r.u8();
  if (version != kFormatVersion) {
    throw FormatError("bitstream: unsupported version " + std::to_string(version));
  }

  Bitstream bs;
  bs.width = r.u16();
  bs.height = r.u16();
  if (bs.width == 0 || bs.height == 0) {
    throw FormatError("bitstream: zero image dimension");
  }
  bs.lambda_index = r.u8();
  if (bs.lambda_index >= kLambdaCount) {
    throw FormatError("bitstream: lambda index out of range");
  }
  bs.rho_f_index = r.u8();
  bs.rho_h_index = r.u8();
  if (bs.rho_f_index >= kShiftIndexCount || bs.rho_h_index >= kShiftIndexCount) {
    throw FormatError("bitstream: shift index out of range");
  }

  const uint32_t side_len = r.u32();
  std::span<const uint8_t> side = r.take(side_len);
  bs.side_payload.assign(side.begin(), side.end());
  const uint32_t main_len = r.u32();
  std::span<const uint8_t> main = r.take(main_len);
  bs.main_payload.assign(main.begin(), main.end());

  if (r.remaining() != 0) throw FormatError("bitstream: trailing bytes after payload");
  return bs;
}

}  // namespace gsc
