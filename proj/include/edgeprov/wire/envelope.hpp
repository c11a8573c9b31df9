#pragma once

#include <span>
#include <vector>

#include "edgeprov/bytes.hpp"
#include "edgeprov/model.hpp"

namespace edgeprov::wire {

inline constexpr std::uint8_t kEnvelopeCompressed = 0x01;

/// Upper bound on an inflated envelope body. Anything larger is rejected as
/// Malformed rather than allocated.
inline constexpr std::size_t kMaxBodyBytes = 64u << 20;

/// Raw DEFLATE (no zlib/gzip container).
Bytes deflate_raw(ByteView input);
/// Inverse of deflate_raw; Malformed on corrupt streams or output past `limit`.
Bytes inflate_raw(ByteView input, std::size_t limit = kMaxBodyBytes);

/// flags u8 (bit0 = compressed) | count u16 | body.
/// Body is the concatenation of encoded records, deflated when `compress`.
/// Throws TooManyItems for an empty batch or one above 65,535 records.
Bytes seal_envelope(std::span<const CaptureRecord> records, bool compress);

/// Inverse of seal_envelope. Malformed on unknown flag bits, count mismatch,
/// trailing bytes or decompression failure.
std::vector<CaptureRecord> open_envelope(ByteView bytes);

}  // namespace edgeprov::wire
