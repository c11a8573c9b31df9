#include "edgeprov/wire/envelope.hpp"

#include <zlib.h>

#include "edgeprov/wire/record_codec.hpp"

namespace edgeprov::wire {
namespace {

constexpr int kRawWindowBits = -15;

}  // namespace

Bytes deflate_raw(ByteView input) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, kRawWindowBits, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(Errc::Io, "deflateInit2 failed");
  }
  Bytes out(deflateBound(&zs, static_cast<uLong>(input.size())));
  zs.next_in = const_cast<Bytef*>(input.data());
  zs.avail_in = static_cast<uInt>(input.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(Errc::Io, "deflate did not finish");
  out.resize(produced);
  return out;
}

Bytes inflate_raw(ByteView input, std::size_t limit) {
  z_stream zs{};
  if (inflateInit2(&zs, kRawWindowBits) != Z_OK) throw Error(Errc::Io, "inflateInit2 failed");
  Bytes out;
  std::uint8_t chunk[16384];
  zs.next_in = const_cast<Bytef*>(input.data());
  zs.avail_in = static_cast<uInt>(input.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk;
    zs.avail_out = sizeof(chunk);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(Errc::Malformed, "corrupt deflate stream");
    }
    const auto produced = sizeof(chunk) - zs.avail_out;
    if (out.size() + produced > limit) {
      inflateEnd(&zs);
      throw Error(Errc::Malformed, "inflated body exceeds limit");
    }
    out.insert(out.end(), chunk, chunk + produced);
    if (rc == Z_OK && produced == 0 && zs.avail_in == 0) {
      inflateEnd(&zs);
      throw Error(Errc::Malformed, "truncated deflate stream");
    }
  }
  const bool trailing = zs.avail_in != 0;
  inflateEnd(&zs);
  if (trailing) throw Error(Errc::Malformed, "bytes after end of deflate stream");
  return out;
}

Bytes seal_envelope(std::span<const CaptureRecord> records, bool compress) {
  if (records.empty() || records.size() > 0xFFFF) {
    throw Error(Errc::TooManyItems, "envelope must hold 1..65535 records");
  }
  Bytes body;
  for (const auto& r : records) encode_record(r, body);

  Bytes out;
  ByteWriter w(out);
  w.u8(compress ? kEnvelopeCompressed : 0x00);
  w.u16(static_cast<std::uint16_t>(records.size()));
  if (compress) {
    auto packed = deflate_raw(body);
    w.raw(packed);
  } else {
    w.raw(body);
  }
  return out;
}

std::vector<CaptureRecord> open_envelope(ByteView bytes) {
  ByteReader r(bytes);
  const auto flags = r.u8();
  if ((flags & ~kEnvelopeCompressed) != 0) throw Error(Errc::Malformed, "unknown envelope flags");
  const auto count = r.u16();
  if (count == 0) throw Error(Errc::Malformed, "empty envelope");

  Bytes inflated;
  ByteView body = r.rest();
  if (flags & kEnvelopeCompressed) {
    inflated = inflate_raw(body);
    body = inflated;
  }

  std::vector<CaptureRecord> records;
  records.reserve(count);
  std::size_t offset = 0;
  for (std::uint16_t i = 0; i < count; ++i) {
    auto decoded = decode_record(body.subspan(offset));
    offset += decoded.consumed;
    records.push_back(std::move(decoded.record));
  }
  if (offset != body.size()) throw Error(Errc::Malformed, "trailing bytes after declared records");
  return records;
}

}  // namespace edgeprov::wire
