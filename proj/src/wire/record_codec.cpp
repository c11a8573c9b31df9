#include "edgeprov/wire/record_codec.hpp"

#include <type_traits>

namespace edgeprov::wire {
namespace {

constexpr std::uint8_t kTagString = 0x01;
constexpr std::uint8_t kTagInt = 0x02;
constexpr std::uint8_t kTagFloat = 0x03;
constexpr std::uint8_t kTagBool = 0x04;

void write_ids(ByteWriter& w, const std::vector<std::string>& ids) {
  w.count16(ids.size());
  for (const auto& id : ids) w.str16(id);
}

std::vector<std::string> read_ids(ByteReader& r) {
  const auto n = r.u16();
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i) ids.push_back(r.str16());
  return ids;
}

void write_value(ByteWriter& w, const Scalar& value) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          w.u8(kTagString);
          w.str16(v);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          w.u8(kTagInt);
          w.u64(static_cast<std::uint64_t>(v));
        } else if constexpr (std::is_same_v<T, double>) {
          w.u8(kTagFloat);
          w.f64(v);
        } else {
          w.u8(kTagBool);
          w.u8(v ? 1 : 0);
        }
      },
      value);
}

Scalar read_value(ByteReader& r) {
  switch (r.u8()) {
    case kTagString: return r.str16();
    case kTagInt: return static_cast<std::int64_t>(r.u64());
    case kTagFloat: return r.f64();
    case kTagBool: {
      const auto b = r.u8();
      if (b > 1) throw Error(Errc::Malformed, "bool value out of range");
      return b == 1;
    }
    default: throw Error(Errc::Malformed, "unknown attribute tag");
  }
}

std::size_t value_size(const Scalar& value) {
  return 1 + std::visit(
                 [](const auto& v) -> std::size_t {
                   using T = std::decay_t<decltype(v)>;
                   if constexpr (std::is_same_v<T, std::string>) return 2 + v.size();
                   else if constexpr (std::is_same_v<T, bool>) return 1;
                   else return 8;
                 },
                 value);
}

}  // namespace

void encode_record(const CaptureRecord& record, Bytes& out) {
  if (!is_well_formed(record)) {
    throw Error(Errc::InvalidArgument, "record violates shape rules for " + std::string(to_string(record.kind)));
  }
  ByteWriter w(out);
  w.u8(static_cast<std::uint8_t>(record.kind));
  w.str16(record.workflow_id);
  w.str16(record.task_id);
  write_ids(w, record.dependencies);
  w.count16(record.data.size());
  for (const auto& d : record.data) {
    w.str16(d.id);
    write_ids(w, d.derivations);
    w.count16(d.attributes.size());
    for (const auto& a : d.attributes) {
      w.str16(a.key);
      write_value(w, a.value);
    }
  }
  w.u64(static_cast<std::uint64_t>(record.timestamp));
}

Bytes encode_record(const CaptureRecord& record) {
  Bytes out;
  out.reserve(encoded_size(record));
  encode_record(record, out);
  return out;
}

std::size_t encoded_size(const CaptureRecord& record) {
  std::size_t n = 1 + 2 + record.workflow_id.size() + 2 + record.task_id.size() + 2 + 2 + 8;
  for (const auto& dep : record.dependencies) n += 2 + dep.size();
  for (const auto& d : record.data) {
    n += 2 + d.id.size() + 2 + 2;
    for (const auto& src : d.derivations) n += 2 + src.size();
    for (const auto& a : d.attributes) n += 2 + a.key.size() + value_size(a.value);
  }
  return n;
}

Decoded decode_record(ByteView bytes) {
  ByteReader r(bytes);
  Decoded out;
  auto& rec = out.record;
  const auto kind = r.u8();
  if (kind < 0x01 || kind > 0x04) throw Error(Errc::Malformed, "unknown record kind");
  rec.kind = static_cast<RecordKind>(kind);
  rec.workflow_id = r.str16();
  rec.task_id = r.str16();
  rec.dependencies = read_ids(r);
  const auto data_count = r.u16();
  rec.data.reserve(data_count);
  for (std::uint16_t i = 0; i < data_count; ++i) {
    DataPayload d;
    d.id = r.str16();
    d.derivations = read_ids(r);
    const auto attr_count = r.u16();
    d.attributes.reserve(attr_count);
    for (std::uint16_t k = 0; k < attr_count; ++k) {
      Attribute a;
      a.key = r.str16();
      a.value = read_value(r);
      d.attributes.push_back(std::move(a));
    }
    rec.data.push_back(std::move(d));
  }
  rec.timestamp = static_cast<std::int64_t>(r.u64());
  if (!is_well_formed(rec)) throw Error(Errc::Malformed, "record violates shape rules");
  out.consumed = r.position();
  return out;
}

}  // namespace edgeprov::wire
