#pragma once

// Real sockets: a UDP endpoint, the broker server loop, a threaded client
// wrapper, and a shaping proxy that puts a LinkEmulator between them.

#include <atomic>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "edgeprov/bytes.hpp"
#include "edgeprov/clock.hpp"
#include "edgeprov/transport/broker.hpp"
#include "edgeprov/transport/client.hpp"
#include "edgeprov/transport/link.hpp"

namespace edgeprov::transport {

/// Splits "host:port". InvalidArgument when malformed.
std::pair<std::string, std::uint16_t> split_host_port(const std::string& address);

class UdpSocket {
 public:
  /// Binds to "host:port" (port 0 picks a free one).
  explicit UdpSocket(const std::string& bind_address = "127.0.0.1:0");
  ~UdpSocket();
  UdpSocket(UdpSocket&& other) noexcept;
  UdpSocket& operator=(UdpSocket&& other) noexcept;
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;

  Address local_address() const;
  int fd() const noexcept { return fd_; }

  void send_to(const Address& to, ByteView datagram);
  /// Waits up to `timeout` for one datagram.
  std::optional<std::pair<Address, Bytes>> receive(Micros timeout);

 private:
  int fd_ = -1;
};

/// Runs a Broker on a UDP socket in a background thread.
class BrokerServer {
 public:
  explicit BrokerServer(const std::string& bind_address, BrokerConfig config = {});
  ~BrokerServer();

  Address address() const { return address_; }
  void stop();

  /// Runs `fn` with the broker locked.
  void inspect(const std::function<void(const Broker&)>& fn);

 private:
  void loop();

  UdpSocket socket_;
  Address address_;
  SteadyClock clock_;
  std::mutex mu_;
  Broker broker_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

/// ClientSession on a UDP socket with a background receive/timer thread.
class UdpClient {
 public:
  UdpClient(ClientConfig config, Address broker, const Clock& clock);
  ~UdpClient();

  /// Runs `fn` with the session locked and sends what it queued.
  void with_session(const std::function<void(ClientSession&)>& fn);
  /// Blocks until `pred(session)` holds or the clock reaches `deadline`.
  bool wait_until(const std::function<bool(ClientSession&)>& pred, Micros deadline);

  void stop();

 private:
  void loop();
  void flush_locked();

  const Clock& clock_;
  Address broker_;
  UdpSocket socket_;
  std::mutex mu_;
  std::condition_variable cv_;
  ClientSession session_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

/// UDP relay that shapes traffic in both directions. Every client address
/// gets its own upstream socket, links and seeds (seed, seed + 1, ...).
class LinkProxy {
 public:
  LinkProxy(const std::string& bind_address, Address upstream, LinkConfig up, LinkConfig down);
  ~LinkProxy();

  Address address() const { return address_; }
  void stop();

 private:
  struct Peer {
    Address client;
    UdpSocket upstream;
    LinkEmulator up;
    LinkEmulator down;
  };
  struct Pending {
    Micros at;
    std::uint64_t seq;
    Peer* peer;
    bool to_upstream;
    Bytes datagram;
    bool operator>(const Pending& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };

  void loop();
  Peer& peer_for(const Address& client);

  UdpSocket listen_;
  Address address_;
  Address upstream_;
  LinkConfig up_;
  LinkConfig down_;
  SteadyClock clock_;
  std::map<Address, std::unique_ptr<Peer>> peers_;
  std::vector<Pending> queue_;  // heap
  std::uint64_t seq_ = 0;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace edgeprov::transport
