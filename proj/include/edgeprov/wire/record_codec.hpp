#pragma once

#include <cstddef>

#include "edgeprov/bytes.hpp"
#include "edgeprov/model.hpp"

namespace edgeprov::wire {

/// Appends the binary form of `record` to `out`.
///
/// Layout: kind u8, workflow_id str16, task_id str16, dependency count u16
/// with str16 ids, data count u16 with each data record as (id str16,
/// derivation count u16 + str16 ids, attribute count u16 + (key str16,
/// tag u8, value)), timestamp u64. All integers big-endian.
///
/// Throws StringTooLong / TooManyItems past the u16 limits and
/// InvalidArgument for records that break the per-kind shape rules.
void encode_record(const CaptureRecord& record, Bytes& out);
Bytes encode_record(const CaptureRecord& record);

/// Exact number of bytes encode_record would produce.
std::size_t encoded_size(const CaptureRecord& record);

struct Decoded {
  CaptureRecord record;
  std::size_t consumed = 0;
};

/// Decodes one record from the front of `bytes`; trailing bytes are left
/// for the caller. Throws Errc::Malformed on any framing, tag or UTF-8 error.
Decoded decode_record(ByteView bytes);

}  // namespace edgeprov::wire
