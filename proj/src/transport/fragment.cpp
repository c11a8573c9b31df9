#include "edgeprov/transport/fragment.hpp"

#include <algorithm>

namespace edgeprov::transport {

std::vector<Bytes> fragment_payload(ByteView payload, std::uint32_t envelope_id) {
  const std::size_t total = std::max<std::size_t>(1, (payload.size() + kMaxFragmentChunk - 1) / kMaxFragmentChunk);
  if (total > 0xFFFF) throw Error(Errc::InvalidArgument, "payload needs more than 65535 fragments");
  std::vector<Bytes> out;
  out.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const auto begin = i * kMaxFragmentChunk;
    const auto len = std::min(kMaxFragmentChunk, payload.size() - begin);
    Bytes frag;
    frag.reserve(kFragmentHeaderBytes + len);
    ByteWriter w(frag);
    w.u8(kFragmentVersion);
    w.u32(envelope_id);
    w.u16(static_cast<std::uint16_t>(i));
    w.u16(static_cast<std::uint16_t>(total));
    w.raw(payload.subspan(begin, len));
    out.push_back(std::move(frag));
  }
  return out;
}

std::pair<FragmentHeader, ByteView> parse_fragment(ByteView fragment) {
  ByteReader r(fragment);
  if (r.u8() != kFragmentVersion) throw Error(Errc::Malformed, "unknown fragment version");
  FragmentHeader h;
  h.envelope_id = r.u32();
  h.index = r.u16();
  h.total = r.u16();
  if (h.total == 0 || h.index >= h.total) throw Error(Errc::Malformed, "bad fragment index");
  if (r.remaining() > kMaxFragmentChunk) throw Error(Errc::Malformed, "oversized fragment");
  return {h, r.rest()};
}

std::optional<Bytes> Reassembler::push(std::uint16_t topic_id, ByteView fragment) {
  auto [header, chunk] = parse_fragment(fragment);
  if (header.total == 1) return Bytes(chunk.begin(), chunk.end());

  const Key key{topic_id, header.envelope_id};
  auto it = partials_.find(key);
  if (it == partials_.end()) {
    if (partials_.size() >= max_partials_) {
      while (!order_.empty() && !partials_.contains(order_.front())) order_.pop_front();
      if (!order_.empty()) {
        partials_.erase(order_.front());
        order_.pop_front();
        ++evicted_;
      }
    }
    Partial p;
    p.total = header.total;
    p.chunks.resize(header.total);
    it = partials_.emplace(key, std::move(p)).first;
    order_.push_back(key);
  }
  auto& partial = it->second;
  if (partial.total != header.total) throw Error(Errc::Malformed, "fragment total changed mid-envelope");
  auto& slot = partial.chunks[header.index];
  if (slot) return std::nullopt;
  slot.emplace(chunk.begin(), chunk.end());
  if (++partial.received < partial.total) return std::nullopt;

  Bytes whole;
  for (auto& c : partial.chunks) whole.insert(whole.end(), c->begin(), c->end());
  partials_.erase(it);
  return whole;
}

}  // namespace edgeprov::transport
