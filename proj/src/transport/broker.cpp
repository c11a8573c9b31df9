#include "edgeprov/transport/broker.hpp"

#include <algorithm>

#include "edgeprov/error.hpp"

namespace edgeprov::transport {

Broker::Broker(BrokerConfig config) : config_(std::move(config)) {}

std::optional<std::uint16_t> Broker::topic_id(const std::string& name) const {
  auto it = topic_ids_.find(name);
  if (it == topic_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint16_t> Broker::intern_topic(const std::string& name) {
  if (auto id = topic_id(name)) return id;
  if (next_topic_id_ == 0) return std::nullopt;  // wrapped: id space exhausted
  const auto id = next_topic_id_++;
  topics_.emplace(id, name);
  topic_ids_.emplace(name, id);
  return id;
}

Broker::Session* Broker::session_at(const Address& addr) {
  auto it = by_address_.find(addr);
  if (it == by_address_.end()) return nullptr;
  auto s = sessions_.find(it->second);
  return s == sessions_.end() ? nullptr : &s->second;
}

std::vector<SessionCounters> Broker::session_counters() const {
  std::vector<SessionCounters> out;
  for (const auto& [id, s] : sessions_) {
    auto c = s.counters;
    c.client_id = id;
    c.address = s.address;
    c.connected = s.connected;
    for (const auto& [t, lane] : s.lanes) c.retransmissions += lane.sender.retransmissions();
    out.push_back(std::move(c));
  }
  return out;
}

bool Broker::quiescent() const {
  for (const auto& [id, s] : sessions_) {
    for (const auto& [t, lane] : s.lanes) {
      if (!lane.sender.idle()) return false;
    }
  }
  return true;
}

void Broker::emit(Session& s, const std::vector<Frame>& frames, std::vector<Outgoing>& out) {
  for (const auto& f : frames) {
    auto bytes = serialize(f);
    ++s.counters.frames_out;
    s.counters.bytes_out += bytes.size();
    out.push_back({s.address, std::move(bytes)});
  }
}

void Broker::on_connect(const Address& from, const Connect& c, std::vector<Outgoing>& out) {
  auto reply = [&](std::uint8_t rc) { out.push_back({from, serialize(Connack{rc})}); };
  if (c.protocol_id != kProtocolId) return reply(kRejectedNotSupported);

  auto it = sessions_.find(c.client_id);
  if (it == sessions_.end()) {
    if (sessions_.size() >= config_.max_sessions) return reply(kRejectedCongestion);
    it = sessions_.emplace(c.client_id, Session{}).first;
    it->second.client_id = c.client_id;
    it->second.rx = Qos2Receiver(config_.completed_window);
  } else if (c.clean_session) {
    auto& s = it->second;
    s.rx.clear();
    s.filters.clear();
    s.exact_topics.clear();
    for (auto& [t, lane] : s.lanes) dropped_forwards_ += lane.sender.backlog();
    s.lanes.clear();
    s.ids.reset();
  }
  auto& s = it->second;
  if (!s.address.empty() && s.address != from) by_address_.erase(s.address);
  // another client previously bound to this address loses the binding
  by_address_[from] = c.client_id;
  s.address = from;
  s.connected = true;
  s.clean = c.clean_session;
  ++s.counters.frames_out;
  auto bytes = serialize(Connack{kAccepted});
  s.counters.bytes_out += bytes.size();
  out.push_back({from, std::move(bytes)});
}

void Broker::forward(std::uint16_t topic_id, Bytes payload) {
  const auto& name = topics_.at(topic_id);
  for (auto& [id, s] : sessions_) {
    const bool match = std::any_of(s.filters.begin(), s.filters.end(),
                                   [&](const std::string& f) { return topic_matches(f, name); });
    if (!match) continue;
    auto& lane = s.lanes[topic_id];
    if (s.exact_topics.contains(topic_id)) lane.registered = true;
    lane.sender.enqueue({topic_id, payload, 0});
  }
}

bool Broker::msg_id_in_use(const Session& s, std::uint16_t id) const {
  for (const auto& [t, lane] : s.lanes) {
    if (!lane.registered && lane.register_msg_id == id) return true;
    if (lane.sender.inflight() && lane.sender.inflight()->msg_id == id) return true;
  }
  return false;
}

void Broker::pump(Session& s, Micros now, std::vector<Frame>& out) {
  if (!s.connected) return;
  auto in_use = [&](std::uint16_t id) { return msg_id_in_use(s, id); };
  std::vector<std::uint16_t> failed;
  for (auto& [topic, lane] : s.lanes) {
    if (!lane.registered) {
      if (lane.sender.idle()) continue;
      if (lane.register_msg_id == 0) {
        lane.register_msg_id = s.ids.next(in_use);
        lane.register_sent = now;
        lane.register_retries = 0;
        out.push_back(Register{topic, lane.register_msg_id, topics_.at(topic)});
      } else if (now >= lane.register_sent + config_.retry.timeout(lane.register_retries)) {
        if (lane.register_retries >= config_.retry.max_retries) {
          failed.push_back(topic);
          continue;
        }
        ++lane.register_retries;
        lane.register_sent = now;
        out.push_back(Register{topic, lane.register_msg_id, topics_.at(topic)});
      }
      continue;
    }
    std::vector<Qos2Sender::Completion> done;
    lane.sender.poll(now, config_.retry, s.ids, in_use, out, done);
    for (const auto& d : done) {
      if (!d.delivered) ++dropped_forwards_;
    }
  }
  for (auto topic : failed) {
    dropped_forwards_ += s.lanes[topic].sender.backlog();
    s.lanes.erase(topic);
  }
}

void Broker::on_frame(Session& s, Frame frame, Micros now, std::vector<Frame>& reply) {
  std::visit(
      [&](auto&& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Register>) {
          auto id = intern_topic(f.topic_name);
          reply.push_back(Regack{id.value_or(0), f.msg_id, id ? kAccepted : kRejectedCongestion});
        } else if constexpr (std::is_same_v<T, Regack>) {
          for (auto& [topic, lane] : s.lanes) {
            if (!lane.registered && lane.register_msg_id == f.msg_id && topic == f.topic_id) {
              lane.registered = f.return_code == kAccepted;
              lane.register_msg_id = 0;
              if (!lane.registered) {
                dropped_forwards_ += lane.sender.backlog();
                lane.sender.clear();
              }
            }
          }
        } else if constexpr (std::is_same_v<T, Publish>) {
          s.rx.on_publish(f.msg_id, f.topic_id, std::move(f.payload));
          reply.push_back(Pubrec{f.msg_id});
        } else if constexpr (std::is_same_v<T, Pubrel>) {
          if (auto msg = s.rx.on_pubrel(f.msg_id)) {
            ++s.counters.published;
            if (topics_.contains(msg->topic_id)) forward(msg->topic_id, std::move(msg->payload));
          }
          reply.push_back(Pubcomp{f.msg_id});
        } else if constexpr (std::is_same_v<T, Pubrec>) {
          for (auto& [topic, lane] : s.lanes) {
            if (lane.sender.on_pubrec(f.msg_id, now, reply)) break;
          }
        } else if constexpr (std::is_same_v<T, Pubcomp>) {
          std::vector<Qos2Sender::Completion> done;
          for (auto& [topic, lane] : s.lanes) {
            if (lane.sender.on_pubcomp(f.msg_id, now, done)) break;
          }
          s.counters.forwarded += done.size();
        } else if constexpr (std::is_same_v<T, Subscribe>) {
          const bool wildcard = f.topic_name.find('+') != std::string::npos;
          std::uint16_t id = 0;
          if (!wildcard) {
            auto interned = intern_topic(f.topic_name);
            if (!interned) {
              reply.push_back(Suback{0, f.msg_id, kRejectedCongestion});
              return;
            }
            id = *interned;
            s.exact_topics.insert(id);
          }
          s.filters.insert(f.topic_name);
          reply.push_back(Suback{id, f.msg_id, kAccepted});
        } else if constexpr (std::is_same_v<T, Pingreq>) {
          reply.push_back(Pingresp{});
        } else if constexpr (std::is_same_v<T, Disconnect>) {
          s.connected = false;
          reply.push_back(Disconnect{});
        }
        // CONNACK, SUBACK, PINGRESP are client-bound; ignore them here.
      },
      std::move(frame));
}

std::vector<Outgoing> Broker::handle_datagram(const Address& from, ByteView datagram, Micros now) {
  std::vector<Outgoing> out;
  Frame frame;
  try {
    frame = parse_frame(datagram);
  } catch (const Error&) {
    ++malformed_;
    return out;
  }
  if (auto* c = std::get_if<Connect>(&frame)) {
    on_connect(from, *c, out);
    if (auto* s = session_at(from)) {
      ++s->counters.frames_in;
      s->counters.bytes_in += datagram.size();
    }
    return out;
  }
  Session* s = session_at(from);
  if (!s || !s->connected) {
    ++unknown_peer_;
    return out;
  }
  ++s->counters.frames_in;
  s->counters.bytes_in += datagram.size();

  const bool disconnect = std::holds_alternative<Disconnect>(frame);
  std::vector<Frame> reply;
  on_frame(*s, std::move(frame), now, reply);
  emit(*s, reply, out);

  if (disconnect && s->clean) {
    by_address_.erase(s->address);
    for (auto& [t, lane] : s->lanes) dropped_forwards_ += lane.sender.backlog();
    const std::string id = s->client_id;
    sessions_.erase(id);
  }
  // new messages may be forwarded to any subscriber
  for (auto& [id, sub] : sessions_) {
    std::vector<Frame> frames;
    pump(sub, now, frames);
    emit(sub, frames, out);
  }
  return out;
}

std::vector<Outgoing> Broker::tick(Micros now) {
  std::vector<Outgoing> out;
  for (auto& [id, s] : sessions_) {
    std::vector<Frame> frames;
    pump(s, now, frames);
    emit(s, frames, out);
  }
  return out;
}

std::optional<Micros> Broker::next_deadline() const {
  std::optional<Micros> best;
  auto consider = [&](Micros t) {
    if (!best || t < *best) best = t;
  };
  for (const auto& [id, s] : sessions_) {
    if (!s.connected) continue;
    for (const auto& [topic, lane] : s.lanes) {
      if (!lane.registered) {
        if (lane.register_msg_id != 0) consider(lane.register_sent + config_.retry.timeout(lane.register_retries));
        continue;
      }
      if (auto d = lane.sender.next_deadline(config_.retry)) consider(*d);
    }
  }
  return best;
}

}  // namespace edgeprov::transport
