#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edgeprov/bytes.hpp"
#include "edgeprov/clock.hpp"
#include "edgeprov/transport/frame.hpp"
#include "edgeprov/transport/qos2.hpp"

namespace edgeprov::transport {

/// Opaque peer address: "host:port" on UDP, a node name in simulation.
using Address = std::string;

struct Outgoing {
  Address to;
  Bytes datagram;
};

struct BrokerConfig {
  std::size_t max_sessions = 1024;
  RetryPolicy retry;
  std::size_t completed_window = 1024;
};

struct SessionCounters {
  std::string client_id;
  Address address;
  bool connected = false;
  std::uint64_t frames_in = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t frames_out = 0;
  std::uint64_t bytes_out = 0;
  std::uint64_t published = 0;  // PUBLISH handshakes completed by this client
  std::uint64_t forwarded = 0;  // messages delivered to this subscriber
  std::uint64_t retransmissions = 0;
};

/// Broker core. A deterministic state machine: datagrams and timer ticks in,
/// datagrams out. No I/O and no clock of its own.
class Broker {
 public:
  explicit Broker(BrokerConfig config = {});

  std::vector<Outgoing> handle_datagram(const Address& from, ByteView datagram, Micros now);

  /// Retransmissions that are due at `now`.
  std::vector<Outgoing> tick(Micros now);

  /// Earliest time tick() has work to do.
  std::optional<Micros> next_deadline() const;

  const std::map<std::uint16_t, std::string>& topics() const noexcept { return topics_; }
  std::optional<std::uint16_t> topic_id(const std::string& name) const;
  std::size_t session_count() const noexcept { return sessions_.size(); }
  std::vector<SessionCounters> session_counters() const;
  std::uint64_t malformed() const noexcept { return malformed_; }
  std::uint64_t dropped_forwards() const noexcept { return dropped_forwards_; }
  std::uint64_t unknown_peer() const noexcept { return unknown_peer_; }
  /// True when no forwarded message is queued or awaiting acknowledgement.
  bool quiescent() const;

 private:
  struct Lane {
    bool registered = false;
    std::uint16_t register_msg_id = 0;
    Micros register_sent{0};
    int register_retries = 0;
    Qos2Sender sender;
  };
  struct Session {
    std::string client_id;
    Address address;
    bool connected = false;
    bool clean = true;
    Qos2Receiver rx;
    std::set<std::string> filters;
    std::set<std::uint16_t> exact_topics;  // announced to the client via SUBACK/REGACK
    std::map<std::uint16_t, Lane> lanes;   // forwarding, one per topic
    MsgIdAllocator ids;
    SessionCounters counters;
  };

  void on_frame(Session& s, Frame frame, Micros now, std::vector<Frame>& reply);
  void on_connect(const Address& from, const Connect& c, std::vector<Outgoing>& out);
  std::optional<std::uint16_t> intern_topic(const std::string& name);
  void forward(std::uint16_t topic_id, Bytes payload);
  void pump(Session& s, Micros now, std::vector<Frame>& out);
  bool msg_id_in_use(const Session& s, std::uint16_t id) const;
  void emit(Session& s, const std::vector<Frame>& frames, std::vector<Outgoing>& out);
  Session* session_at(const Address& addr);

  BrokerConfig config_;
  std::map<std::string, Session> sessions_;
  std::map<Address, std::string> by_address_;
  std::map<std::uint16_t, std::string> topics_;
  std::map<std::string, std::uint16_t> topic_ids_;
  std::uint16_t next_topic_id_ = 1;
  std::uint64_t malformed_ = 0;
  std::uint64_t dropped_forwards_ = 0;
  std::uint64_t unknown_peer_ = 0;
};

}  // namespace edgeprov::transport
