#pragma once

// MQTT-SN subset frames. All integers big-endian. Header is a one-byte
// total length, or 0x01 followed by a u16 total length for frames longer
// than 255 bytes, then the message type.

#include <cstdint>
#include <string>
#include <variant>

#include "edgeprov/bytes.hpp"

namespace edgeprov::transport {

inline constexpr std::size_t kMaxFrameBytes = 1400;
inline constexpr std::size_t kMaxClientIdBytes = 23;
inline constexpr std::uint8_t kProtocolId = 0x01;

enum class MsgType : std::uint8_t {
  Connect = 0x04,
  Connack = 0x05,
  Register = 0x0A,
  Regack = 0x0B,
  Publish = 0x0C,
  Pubcomp = 0x0E,
  Pubrec = 0x0F,
  Pubrel = 0x10,
  Subscribe = 0x12,
  Suback = 0x13,
  Pingreq = 0x16,
  Pingresp = 0x17,
  Disconnect = 0x18,
};

enum ReturnCode : std::uint8_t {
  kAccepted = 0x00,
  kRejectedCongestion = 0x01,
  kRejectedInvalidTopic = 0x02,
  kRejectedNotSupported = 0x03,
};

inline constexpr std::uint8_t kFlagDup = 0x80;
inline constexpr std::uint8_t kFlagQos2 = 0x40;  // bits 5-6 = 0b10
inline constexpr std::uint8_t kFlagCleanSession = 0x04;

struct Connect {
  bool clean_session = true;
  std::uint8_t protocol_id = kProtocolId;
  std::uint16_t keepalive_s = 60;
  std::string client_id;
  bool operator==(const Connect&) const = default;
};
struct Connack {
  std::uint8_t return_code = kAccepted;
  bool operator==(const Connack&) const = default;
};
struct Register {
  std::uint16_t topic_id = 0;
  std::uint16_t msg_id = 0;
  std::string topic_name;
  bool operator==(const Register&) const = default;
};
struct Regack {
  std::uint16_t topic_id = 0;
  std::uint16_t msg_id = 0;
  std::uint8_t return_code = kAccepted;
  bool operator==(const Regack&) const = default;
};
struct Publish {
  bool dup = false;
  std::uint16_t topic_id = 0;
  std::uint16_t msg_id = 0;
  Bytes payload;
  bool operator==(const Publish&) const = default;
};
struct Pubrec {
  std::uint16_t msg_id = 0;
  bool operator==(const Pubrec&) const = default;
};
struct Pubrel {
  std::uint16_t msg_id = 0;
  bool operator==(const Pubrel&) const = default;
};
struct Pubcomp {
  std::uint16_t msg_id = 0;
  bool operator==(const Pubcomp&) const = default;
};
struct Subscribe {
  bool dup = false;
  std::uint16_t msg_id = 0;
  std::string topic_name;  // '+' matches one level
  bool operator==(const Subscribe&) const = default;
};
struct Suback {
  std::uint16_t topic_id = 0;  // 0 for wildcard filters
  std::uint16_t msg_id = 0;
  std::uint8_t return_code = kAccepted;
  bool operator==(const Suback&) const = default;
};
struct Pingreq {
  bool operator==(const Pingreq&) const = default;
};
struct Pingresp {
  bool operator==(const Pingresp&) const = default;
};
struct Disconnect {
  bool operator==(const Disconnect&) const = default;
};

using Frame = std::variant<Connect, Connack, Register, Regack, Publish, Pubrec, Pubrel, Pubcomp, Subscribe, Suback,
                           Pingreq, Pingresp, Disconnect>;

MsgType msg_type(const Frame& frame) noexcept;
std::string_view to_string(MsgType type) noexcept;

/// Throws InvalidArgument when the frame would exceed kMaxFrameBytes or a
/// field is out of range (client id over 23 bytes, empty topic name).
Bytes serialize(const Frame& frame);

/// Strict parse: declared length must equal the datagram size, reserved flag
/// bits must be clear. Throws Errc::Malformed otherwise.
Frame parse_frame(ByteView datagram);

/// MQTT-style single-level wildcard match: '+' spans exactly one level.
bool topic_matches(std::string_view filter, std::string_view topic) noexcept;

}  // namespace edgeprov::transport
