#include "edgeprov/transport/sim.hpp"

namespace edgeprov::transport {

World::World(BrokerConfig broker, std::int64_t epoch_ms) : clock_(epoch_ms), broker_(std::move(broker)) {}

std::size_t World::add_client(ClientConfig config, LinkConfig up, LinkConfig down) {
  const auto i = nodes_.size();
  Node n{"sim:" + std::to_string(i), std::make_unique<ClientSession>(std::move(config)), LinkEmulator(up),
         LinkEmulator(down), {}};
  by_address_.emplace(n.address, i);
  nodes_.push_back(std::move(n));
  return i;
}

void World::on_delivery(std::size_t i, std::function<void(std::vector<Delivery>)> handler) {
  nodes_.at(i).handler = std::move(handler);
}

void World::schedule(bool to_broker, std::size_t node, std::vector<TimedDatagram> datagrams) {
  for (auto& d : datagrams) events_.push(Event{d.deliver_at, seq_++, to_broker, node, std::move(d.datagram)});
}

void World::flush() {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (auto& d : nodes_[i].session->drain_outgoing()) schedule(true, i, nodes_[i].up.transmit(std::move(d), now()));
  }
}

void World::route(std::vector<Outgoing> out) {
  for (auto& o : out) {
    auto it = by_address_.find(o.to);
    if (it == by_address_.end()) continue;
    schedule(false, it->second, nodes_[it->second].down.transmit(std::move(o.datagram), now()));
  }
}

void World::dispatch_deliveries() {
  for (auto& n : nodes_) {
    if (!n.handler) continue;
    auto d = n.session->drain_deliveries();
    if (!d.empty()) n.handler(std::move(d));
  }
}

std::optional<Micros> World::next_event() const {
  std::optional<Micros> best;
  auto consider = [&](std::optional<Micros> t) {
    if (t && (!best || *t < *best)) best = t;
  };
  if (!events_.empty()) consider(events_.top().at);
  consider(broker_.next_deadline());
  for (const auto& n : nodes_) consider(n.session->next_deadline());
  return best;
}

bool World::step(Micros limit) {
  flush();
  auto next = next_event();
  if (!next || *next > limit) return false;
  clock_.advance_to(*next);
  const auto t = now();

  while (!events_.empty() && events_.top().at <= t) {
    // priority_queue::top is const; the event is copied out before pop
    Event e = events_.top();
    events_.pop();
    ++delivered_;
    if (e.to_broker) {
      route(broker_.handle_datagram(nodes_[e.node].address, e.datagram, t));
    } else {
      nodes_[e.node].session->handle_datagram(e.datagram, t);
    }
  }
  if (auto d = broker_.next_deadline(); d && *d <= t) route(broker_.tick(t));
  for (auto& n : nodes_) {
    if (auto d = n.session->next_deadline(); d && *d <= t) n.session->tick(t);
  }
  flush();
  dispatch_deliveries();
  return true;
}

void World::run_until(Micros t) {
  while (step(t)) {
  }
  clock_.advance_to(t);
  flush();
}

bool World::run_until(const std::function<bool()>& pred, Micros deadline) {
  flush();
  while (!pred()) {
    if (!step(deadline)) {
      if (deadline != kForever) clock_.advance_to(deadline);
      return pred();
    }
  }
  return true;
}

}  // namespace edgeprov::transport
