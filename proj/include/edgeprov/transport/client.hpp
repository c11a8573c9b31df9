#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgeprov/bytes.hpp"
#include "edgeprov/clock.hpp"
#include "edgeprov/error.hpp"
#include "edgeprov/transport/fragment.hpp"
#include "edgeprov/transport/frame.hpp"
#include "edgeprov/transport/qos2.hpp"

namespace edgeprov::transport {

struct ClientConfig {
  std::string client_id;
  bool clean_session = true;
  std::uint16_t keepalive_s = 60;
  RetryPolicy retry;
  std::size_t completed_window = 1024;
  std::size_t max_partials = 1024;
};

enum class SessionState { Disconnected, Connecting, Connected };

struct Delivery {
  std::string topic;
  std::uint16_t topic_id = 0;
  Bytes payload;
};

struct PublishAck {
  std::uint32_t publication = 0;
  bool delivered = false;
};

struct ClientStats {
  std::uint64_t frames_sent = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t frames_received = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t malformed = 0;
  std::uint64_t publications = 0;
  std::uint64_t fragments = 0;
};

/// One MQTT-SN client session, without I/O. The owner feeds received
/// datagrams and clock ticks in and ships drain_outgoing() to the broker.
///
/// Publishing is non-blocking: publish() queues the payload (split into
/// fragments) behind a single in-flight QoS 2 window and returns a
/// publication id whose completion shows up in poll_acks().
class ClientSession {
 public:
  explicit ClientSession(ClientConfig config);

  const ClientConfig& config() const noexcept { return config_; }
  SessionState state() const noexcept { return state_; }

  /// Starts the CONNECT exchange. A clean session drops all previous state.
  void connect(Micros now);
  /// Error of the last connect attempt: Timeout or Rejected.
  std::optional<Error> connect_error() const { return connect_error_; }

  /// Idempotent per name. Completion: topic_id(name) or request_error(name).
  void register_topic(const std::string& name, Micros now);
  std::optional<std::uint16_t> topic_id(const std::string& name) const;

  void subscribe(const std::string& filter, Micros now);
  bool subscribed(const std::string& filter) const { return subscribed_.contains(filter); }

  /// Failure of a REGISTER (key = topic name) or SUBSCRIBE (key = filter).
  std::optional<Error> request_error(const std::string& key) const;

  /// NotConnected unless Connected.
  std::uint32_t publish(std::uint16_t topic_id, ByteView payload, Micros now);

  void disconnect(Micros now);

  void handle_datagram(ByteView datagram, Micros now);
  void tick(Micros now);
  std::optional<Micros> next_deadline() const;

  std::vector<Bytes> drain_outgoing();
  std::vector<Delivery> drain_deliveries();
  bool has_deliveries() const noexcept { return !deliveries_.empty(); }
  std::vector<PublishAck> poll_acks();

  /// Publications not yet acknowledged or failed.
  std::size_t unacked() const noexcept { return remaining_.size(); }
  const ClientStats& stats() const noexcept { return stats_; }

 private:
  struct Pending {
    Frame frame;
    std::string key;
    Micros sent{0};
    int retries = 0;
  };

  void send(const Frame& frame, Micros now);
  void on_frame(Frame frame, Micros now);
  void reset_state();
  bool msg_id_in_use(std::uint16_t id) const;
  void settle(const std::vector<Qos2Sender::Completion>& done);
  void pump(Micros now);

  ClientConfig config_;
  SessionState state_ = SessionState::Disconnected;
  std::optional<Pending> connect_;
  std::optional<Error> connect_error_;
  std::map<std::uint16_t, Pending> requests_;  // REGISTER / SUBSCRIBE by msg id
  std::map<std::string, Error> request_errors_;
  std::map<std::string, std::uint16_t> topic_map_;
  std::map<std::uint16_t, std::string> topic_names_;
  std::map<std::string, bool> subscribed_;
  MsgIdAllocator ids_;
  Qos2Sender sender_;
  Qos2Receiver rx_;
  Reassembler reassembler_;
  std::uint32_t next_publication_ = 1;
  std::map<std::uint32_t, std::size_t> remaining_;  // publication -> fragments left
  std::vector<PublishAck> acks_;
  std::vector<Bytes> outbox_;
  std::vector<Delivery> deliveries_;
  Micros last_sent_{0};
  std::optional<Micros> ping_sent_;
  ClientStats stats_;
};

}  // namespace edgeprov::transport
