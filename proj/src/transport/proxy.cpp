#include <poll.h>

#include <algorithm>

#include "edgeprov/transport/udp.hpp"

namespace edgeprov::transport {

LinkProxy::LinkProxy(const std::string& bind_address, Address upstream, LinkConfig up, LinkConfig down)
    : listen_(bind_address), address_(listen_.local_address()), upstream_(std::move(upstream)), up_(up), down_(down) {
  up_.validate();
  down_.validate();
  thread_ = std::thread([this] { loop(); });
}

LinkProxy::~LinkProxy() { stop(); }

void LinkProxy::stop() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

LinkProxy::Peer& LinkProxy::peer_for(const Address& client) {
  auto it = peers_.find(client);
  if (it != peers_.end()) return *it->second;
  const auto n = peers_.size();
  LinkConfig up = up_;
  LinkConfig down = down_;
  up.seed = up_.seed + 2 * n;
  down.seed = down_.seed + 2 * n + 1;
  auto peer = std::make_unique<Peer>(Peer{client, UdpSocket("0.0.0.0:0"), LinkEmulator(up), LinkEmulator(down)});
  return *peers_.emplace(client, std::move(peer)).first->second;
}

void LinkProxy::loop() {
  using namespace std::chrono_literals;
  auto enqueue = [&](Peer* peer, bool to_upstream, std::vector<TimedDatagram> out) {
    for (auto& d : out) {
      queue_.push_back(Pending{d.deliver_at, seq_++, peer, to_upstream, std::move(d.datagram)});
      std::push_heap(queue_.begin(), queue_.end(), std::greater<>{});
    }
  };

  while (!stop_) {
    const auto now = clock_.now();
    while (!queue_.empty() && queue_.front().at <= now) {
      std::pop_heap(queue_.begin(), queue_.end(), std::greater<>{});
      auto p = std::move(queue_.back());
      queue_.pop_back();
      if (p.to_upstream) {
        p.peer->upstream.send_to(upstream_, p.datagram);
      } else {
        listen_.send_to(p.peer->client, p.datagram);
      }
    }

    Micros wait = 20ms;
    if (!queue_.empty()) wait = std::clamp(queue_.front().at - now, Micros{0}, wait);

    std::vector<pollfd> fds;
    std::vector<Peer*> owners;
    fds.push_back({listen_.fd(), POLLIN, 0});
    owners.push_back(nullptr);
    for (auto& [addr, peer] : peers_) {
      fds.push_back({peer->upstream.fd(), POLLIN, 0});
      owners.push_back(peer.get());
    }
    // poll has millisecond resolution; sub-millisecond waits spin once
    const int ms = static_cast<int>(wait.count() / 1000);
    if (::poll(fds.data(), fds.size(), ms) <= 0) continue;

    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (!(fds[i].revents & POLLIN)) continue;
      if (!owners[i]) {
        if (auto got = listen_.receive(Micros{0})) {
          auto& peer = peer_for(got->first);
          enqueue(&peer, true, peer.up.transmit(std::move(got->second), clock_.now()));
        }
      } else if (auto got = owners[i]->upstream.receive(Micros{0})) {
        enqueue(owners[i], false, owners[i]->down.transmit(std::move(got->second), clock_.now()));
      }
    }
  }
}

}  // namespace edgeprov::transport
