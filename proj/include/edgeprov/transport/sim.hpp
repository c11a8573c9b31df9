#pragma once

// In-process network on a virtual clock: one broker, any number of client
// sessions, each attached through its own pair of emulated links.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

#include "edgeprov/clock.hpp"
#include "edgeprov/transport/broker.hpp"
#include "edgeprov/transport/client.hpp"
#include "edgeprov/transport/link.hpp"

namespace edgeprov::transport {

class World {
 public:
  explicit World(BrokerConfig broker = {}, std::int64_t epoch_ms = VirtualClock::kDefaultEpochMs);

  VirtualClock& clock() noexcept { return clock_; }
  Micros now() const { return clock_.now(); }
  Broker& broker() noexcept { return broker_; }

  /// Adds a client behind `up` (client to broker) and `down` links. Returns its index.
  std::size_t add_client(ClientConfig config, LinkConfig up = {}, LinkConfig down = {});

  std::size_t client_count() const noexcept { return nodes_.size(); }
  ClientSession& client(std::size_t i) { return *nodes_.at(i).session; }
  const Address& address(std::size_t i) const { return nodes_.at(i).address; }
  LinkEmulator& uplink(std::size_t i) { return nodes_.at(i).up; }
  LinkEmulator& downlink(std::size_t i) { return nodes_.at(i).down; }

  /// Called with the client's completed deliveries whenever it has some.
  /// Without a handler deliveries stay queued in the session.
  void on_delivery(std::size_t i, std::function<void(std::vector<Delivery>)> handler);

  /// Pushes everything clients queued into their uplinks at the current time.
  void flush();

  /// Time of the next network event or protocol timer.
  std::optional<Micros> next_event() const;

  /// Advances to the next event, but not past `limit`, and processes
  /// everything due. Returns false when nothing was due before `limit`.
  bool step(Micros limit = kForever);

  void run_until(Micros t);
  /// Runs until `pred()` holds or `deadline` passes. Returns pred().
  bool run_until(const std::function<bool()>& pred, Micros deadline = kForever);

  std::uint64_t delivered_datagrams() const noexcept { return delivered_; }

 private:
  struct Node {
    Address address;
    std::unique_ptr<ClientSession> session;
    LinkEmulator up;
    LinkEmulator down;
    std::function<void(std::vector<Delivery>)> handler;
  };
  struct Event {
    Micros at;
    std::uint64_t seq;
    bool to_broker;
    std::size_t node;
    Bytes datagram;
    bool operator>(const Event& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };

  void schedule(bool to_broker, std::size_t node, std::vector<TimedDatagram> datagrams);
  void route(std::vector<Outgoing> out);
  void dispatch_deliveries();

  VirtualClock clock_;
  Broker broker_;
  std::vector<Node> nodes_;
  std::map<Address, std::size_t> by_address_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  std::uint64_t delivered_ = 0;
};

}  // namespace edgeprov::transport
