#include "edgeprov/transport/frame.hpp"

#include <type_traits>

namespace edgeprov::transport {

MsgType msg_type(const Frame& frame) noexcept {
  return std::visit(
      [](const auto& f) -> MsgType {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Connect>) return MsgType::Connect;
        else if constexpr (std::is_same_v<T, Connack>) return MsgType::Connack;
        else if constexpr (std::is_same_v<T, Register>) return MsgType::Register;
        else if constexpr (std::is_same_v<T, Regack>) return MsgType::Regack;
        else if constexpr (std::is_same_v<T, Publish>) return MsgType::Publish;
        else if constexpr (std::is_same_v<T, Pubrec>) return MsgType::Pubrec;
        else if constexpr (std::is_same_v<T, Pubrel>) return MsgType::Pubrel;
        else if constexpr (std::is_same_v<T, Pubcomp>) return MsgType::Pubcomp;
        else if constexpr (std::is_same_v<T, Subscribe>) return MsgType::Subscribe;
        else if constexpr (std::is_same_v<T, Suback>) return MsgType::Suback;
        else if constexpr (std::is_same_v<T, Pingreq>) return MsgType::Pingreq;
        else if constexpr (std::is_same_v<T, Pingresp>) return MsgType::Pingresp;
        else return MsgType::Disconnect;
      },
      frame);
}

std::string_view to_string(MsgType type) noexcept {
  switch (type) {
    case MsgType::Connect: return "CONNECT";
    case MsgType::Connack: return "CONNACK";
    case MsgType::Register: return "REGISTER";
    case MsgType::Regack: return "REGACK";
    case MsgType::Publish: return "PUBLISH";
    case MsgType::Pubcomp: return "PUBCOMP";
    case MsgType::Pubrec: return "PUBREC";
    case MsgType::Pubrel: return "PUBREL";
    case MsgType::Subscribe: return "SUBSCRIBE";
    case MsgType::Suback: return "SUBACK";
    case MsgType::Pingreq: return "PINGREQ";
    case MsgType::Pingresp: return "PINGRESP";
    case MsgType::Disconnect: return "DISCONNECT";
  }
  return "?";
}

namespace {

void raw_string(ByteWriter& w, std::string_view s) { w.raw(as_bytes(s)); }

std::string rest_as_string(ByteReader& r) {
  auto view = r.take(r.remaining());
  return {reinterpret_cast<const char*>(view.data()), view.size()};
}

void expect_end(const ByteReader& r) {
  if (r.remaining() != 0) throw Error(Errc::Malformed, "unexpected trailing bytes");
}

}  // namespace

Bytes serialize(const Frame& frame) {
  Bytes body;
  ByteWriter w(body);
  w.u8(static_cast<std::uint8_t>(msg_type(frame)));
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Connect>) {
          if (f.client_id.empty() || f.client_id.size() > kMaxClientIdBytes) {
            throw Error(Errc::InvalidArgument, "client id must be 1..23 bytes");
          }
          w.u8(f.clean_session ? kFlagCleanSession : 0);
          w.u8(f.protocol_id);
          w.u16(f.keepalive_s);
          raw_string(w, f.client_id);
        } else if constexpr (std::is_same_v<T, Connack>) {
          w.u8(f.return_code);
        } else if constexpr (std::is_same_v<T, Register>) {
          if (f.topic_name.empty()) throw Error(Errc::InvalidArgument, "empty topic name");
          w.u16(f.topic_id);
          w.u16(f.msg_id);
          raw_string(w, f.topic_name);
        } else if constexpr (std::is_same_v<T, Regack>) {
          w.u16(f.topic_id);
          w.u16(f.msg_id);
          w.u8(f.return_code);
        } else if constexpr (std::is_same_v<T, Publish>) {
          w.u8(static_cast<std::uint8_t>(kFlagQos2 | (f.dup ? kFlagDup : 0)));
          w.u16(f.topic_id);
          w.u16(f.msg_id);
          w.raw(f.payload);
        } else if constexpr (std::is_same_v<T, Pubrec> || std::is_same_v<T, Pubrel> || std::is_same_v<T, Pubcomp>) {
          w.u16(f.msg_id);
        } else if constexpr (std::is_same_v<T, Subscribe>) {
          if (f.topic_name.empty()) throw Error(Errc::InvalidArgument, "empty topic filter");
          w.u8(static_cast<std::uint8_t>(kFlagQos2 | (f.dup ? kFlagDup : 0)));
          w.u16(f.msg_id);
          raw_string(w, f.topic_name);
        } else if constexpr (std::is_same_v<T, Suback>) {
          w.u8(kFlagQos2);
          w.u16(f.topic_id);
          w.u16(f.msg_id);
          w.u8(f.return_code);
        }
      },
      frame);

  const std::size_t short_total = body.size() + 1;
  Bytes out;
  ByteWriter h(out);
  if (short_total <= 255) {
    out.reserve(short_total);
    h.u8(static_cast<std::uint8_t>(short_total));
  } else {
    const std::size_t long_total = body.size() + 3;
    if (long_total > kMaxFrameBytes) throw Error(Errc::InvalidArgument, "frame exceeds 1400 bytes");
    out.reserve(long_total);
    h.u8(0x01);
    h.u16(static_cast<std::uint16_t>(long_total));
  }
  h.raw(body);
  return out;
}

Frame parse_frame(ByteView datagram) {
  if (datagram.size() > kMaxFrameBytes) throw Error(Errc::Malformed, "datagram exceeds 1400 bytes");
  ByteReader r(datagram);
  std::size_t declared = r.u8();
  if (declared == 0x01) {
    declared = r.u16();
    if (declared <= 255 + 2) throw Error(Errc::Malformed, "long length form for a short frame");
  } else if (declared < 2) {
    throw Error(Errc::Malformed, "bad length");
  }
  if (declared != datagram.size()) throw Error(Errc::Malformed, "length does not match datagram");

  const auto type = static_cast<MsgType>(r.u8());
  auto qos2_flags = [&](bool allow_dup) {
    const auto flags = r.u8();
    const auto allowed = static_cast<std::uint8_t>(kFlagQos2 | (allow_dup ? kFlagDup : 0));
    if ((flags & 0x60) != kFlagQos2 || (flags & ~allowed) != 0) throw Error(Errc::Malformed, "unsupported flags");
    return (flags & kFlagDup) != 0;
  };

  Frame frame;
  switch (type) {
    case MsgType::Connect: {
      Connect f;
      const auto flags = r.u8();
      if ((flags & ~kFlagCleanSession) != 0) throw Error(Errc::Malformed, "unsupported CONNECT flags");
      f.clean_session = (flags & kFlagCleanSession) != 0;
      f.protocol_id = r.u8();
      if (f.protocol_id != kProtocolId) throw Error(Errc::Malformed, "unknown protocol id");
      f.keepalive_s = r.u16();
      f.client_id = rest_as_string(r);
      if (f.client_id.empty() || f.client_id.size() > kMaxClientIdBytes) throw Error(Errc::Malformed, "client id");
      frame = std::move(f);
      break;
    }
    case MsgType::Connack: frame = Connack{r.u8()}; break;
    case MsgType::Register: {
      Register f;
      f.topic_id = r.u16();
      f.msg_id = r.u16();
      f.topic_name = rest_as_string(r);
      if (f.topic_name.empty()) throw Error(Errc::Malformed, "empty topic name");
      frame = std::move(f);
      break;
    }
    case MsgType::Regack: {
      Regack f;
      f.topic_id = r.u16();
      f.msg_id = r.u16();
      f.return_code = r.u8();
      frame = f;
      break;
    }
    case MsgType::Publish: {
      Publish f;
      f.dup = qos2_flags(true);
      f.topic_id = r.u16();
      f.msg_id = r.u16();
      auto payload = r.take(r.remaining());
      f.payload.assign(payload.begin(), payload.end());
      frame = std::move(f);
      break;
    }
    case MsgType::Pubrec: frame = Pubrec{r.u16()}; break;
    case MsgType::Pubrel: frame = Pubrel{r.u16()}; break;
    case MsgType::Pubcomp: frame = Pubcomp{r.u16()}; break;
    case MsgType::Subscribe: {
      Subscribe f;
      f.dup = qos2_flags(true);
      f.msg_id = r.u16();
      f.topic_name = rest_as_string(r);
      if (f.topic_name.empty()) throw Error(Errc::Malformed, "empty topic filter");
      frame = std::move(f);
      break;
    }
    case MsgType::Suback: {
      Suback f;
      qos2_flags(false);
      f.topic_id = r.u16();
      f.msg_id = r.u16();
      f.return_code = r.u8();
      frame = f;
      break;
    }
    case MsgType::Pingreq: frame = Pingreq{}; break;
    case MsgType::Pingresp: frame = Pingresp{}; break;
    case MsgType::Disconnect: frame = Disconnect{}; break;
    default: throw Error(Errc::Malformed, "unsupported message type");
  }
  expect_end(r);
  return frame;
}

bool topic_matches(std::string_view filter, std::string_view topic) noexcept {
  while (true) {
    const auto fpos = filter.find('/');
    const auto tpos = topic.find('/');
    const auto flevel = filter.substr(0, fpos);
    const auto tlevel = topic.substr(0, tpos);
    if (flevel != "+" && flevel != tlevel) return false;
    if (fpos == std::string_view::npos || tpos == std::string_view::npos) {
      return fpos == std::string_view::npos && tpos == std::string_view::npos;
    }
    filter.remove_prefix(fpos + 1);
    topic.remove_prefix(tpos + 1);
  }
}

}  // namespace edgeprov::transport
