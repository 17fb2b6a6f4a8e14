#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gsc {

/// Number of decoder-side shift step indices representable in the header.
/// Format constant: the step table and this count are tied to kFormatVersion.
inline constexpr int kShiftIndexCount = 8;
inline constexpr uint8_t kFormatVersion = 1;

/// One coded image. Layout (all multi-byte fields little-endian):
///   magic "GSLS" | version u8 | width u16 | height u16 | lambda index u8 |
///   rho_f index u8 | rho_h index u8 | side length u32 | side payload |
///   main length u32 | main payload
struct Bitstream {
  int width = 0;
  int height = 0;
  int lambda_index = 0;
  int rho_f_index = 0;
  int rho_h_index = 0;
  std::vector<uint8_t> side_payload;
  std::vector<uint8_t> main_payload;
};

/// Fixed header size in bytes (magic through both length fields).
inline constexpr size_t kBitstreamHeaderBytes = 4 + 1 + 2 + 2 + 1 + 1 + 1 + 4 + 4;

/// Throws FormatError when a field does not fit its wire type.
std::vector<uint8_t> serialize_bitstream(const Bitstream& bs);

/// Throws FormatError on bad magic/version, out-of-range indices,
/// truncated payloads, or trailing bytes.
Bitstream parse_bitstream(std::span<const uint8_t> bytes);

}  // namespace gsc
