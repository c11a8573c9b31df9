#include "edgeprov/transport/client.hpp"

#include <algorithm>
#include <chrono>

namespace edgeprov::transport {

ClientSession::ClientSession(ClientConfig config)
    : config_(std::move(config)), rx_(config_.completed_window), reassembler_(config_.max_partials) {
  if (config_.client_id.empty() || config_.client_id.size() > kMaxClientIdBytes) {
    throw Error(Errc::InvalidArgument, "client id must be 1..23 bytes");
  }
}

void ClientSession::send(const Frame& frame, Micros now) {
  auto bytes = serialize(frame);
  ++stats_.frames_sent;
  stats_.bytes_sent += bytes.size();
  outbox_.push_back(std::move(bytes));
  last_sent_ = now;
}

void ClientSession::reset_state() {
  requests_.clear();
  request_errors_.clear();
  topic_map_.clear();
  topic_names_.clear();
  subscribed_.clear();
  ids_.reset();
  for (const auto& [pub, left] : remaining_) acks_.push_back({pub, false});
  remaining_.clear();
  sender_.clear();
  rx_.clear();
  reassembler_ = Reassembler(config_.max_partials);
}

void ClientSession::connect(Micros now) {
  if (config_.clean_session) reset_state();
  state_ = SessionState::Connecting;
  connect_error_.reset();
  Connect c{config_.clean_session, kProtocolId, config_.keepalive_s, config_.client_id};
  connect_ = Pending{c, {}, now, 0};
  send(c, now);
}

bool ClientSession::msg_id_in_use(std::uint16_t id) const {
  if (requests_.contains(id)) return true;
  return sender_.inflight() && sender_.inflight()->msg_id == id;
}

void ClientSession::register_topic(const std::string& name, Micros now) {
  if (state_ != SessionState::Connected) throw Error(Errc::NotConnected, "register before connect");
  if (topic_map_.contains(name)) return;
  for (const auto& [id, p] : requests_) {
    if (std::holds_alternative<Register>(p.frame) && p.key == name) return;  // already asked
  }
  request_errors_.erase(name);
  const auto id = ids_.next([&](std::uint16_t m) { return msg_id_in_use(m); });
  Register r{0, id, name};
  requests_.emplace(id, Pending{r, name, now, 0});
  send(r, now);
}

std::optional<std::uint16_t> ClientSession::topic_id(const std::string& name) const {
  auto it = topic_map_.find(name);
  if (it == topic_map_.end()) return std::nullopt;
  return it->second;
}

void ClientSession::subscribe(const std::string& filter, Micros now) {
  if (state_ != SessionState::Connected) throw Error(Errc::NotConnected, "subscribe before connect");
  if (subscribed_.contains(filter)) return;
  request_errors_.erase(filter);
  const auto id = ids_.next([&](std::uint16_t m) { return msg_id_in_use(m); });
  Subscribe s{false, id, filter};
  requests_.emplace(id, Pending{s, filter, now, 0});
  send(s, now);
}

std::optional<Error> ClientSession::request_error(const std::string& key) const {
  auto it = request_errors_.find(key);
  if (it == request_errors_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t ClientSession::publish(std::uint16_t topic_id, ByteView payload, Micros now) {
  if (state_ != SessionState::Connected) throw Error(Errc::NotConnected, "publish while not connected");
  const auto pub = next_publication_++;
  auto fragments = fragment_payload(payload, pub);
  remaining_.emplace(pub, fragments.size());
  ++stats_.publications;
  stats_.fragments += fragments.size();
  for (auto& f : fragments) sender_.enqueue({topic_id, std::move(f), pub});
  pump(now);
  return pub;
}

void ClientSession::disconnect(Micros now) {
  if (state_ == SessionState::Disconnected) return;
  send(Disconnect{}, now);
  state_ = SessionState::Disconnected;
  connect_.reset();
  requests_.clear();
}

void ClientSession::settle(const std::vector<Qos2Sender::Completion>& done) {
  for (const auto& d : done) {
    auto it = remaining_.find(static_cast<std::uint32_t>(d.tag));
    if (it == remaining_.end()) continue;
    if (!d.delivered) {
      sender_.drop_queued(d.tag);
      acks_.push_back({it->first, false});
      remaining_.erase(it);
    } else if (--it->second == 0) {
      acks_.push_back({it->first, true});
      remaining_.erase(it);
    }
  }
}

void ClientSession::pump(Micros now) {
  if (state_ != SessionState::Connected) return;
  std::vector<Frame> frames;
  std::vector<Qos2Sender::Completion> done;
  const auto before = sender_.retransmissions();
  sender_.poll(now, config_.retry, ids_, [&](std::uint16_t m) { return msg_id_in_use(m); }, frames, done);
  stats_.retransmissions += sender_.retransmissions() - before;
  for (const auto& f : frames) send(f, now);
  settle(done);
  // a failed publication frees the window for the next one
  if (!done.empty() && !sender_.inflight() && !sender_.idle()) pump(now);
}

void ClientSession::on_frame(Frame frame, Micros now) {
  std::visit(
      [&](auto&& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Connack>) {
          if (state_ != SessionState::Connecting) return;
          connect_.reset();
          if (f.return_code == kAccepted) {
            state_ = SessionState::Connected;
          } else {
            state_ = SessionState::Disconnected;
            connect_error_ = Error(Errc::Rejected, "CONNACK return code " + std::to_string(f.return_code));
          }
        } else if constexpr (std::is_same_v<T, Regack>) {
          auto it = requests_.find(f.msg_id);
          if (it == requests_.end() || !std::holds_alternative<Register>(it->second.frame)) return;
          if (f.return_code == kAccepted && f.topic_id != 0) {
            topic_map_[it->second.key] = f.topic_id;
            topic_names_[f.topic_id] = it->second.key;
          } else {
            request_errors_.insert_or_assign(
                it->second.key, Error(Errc::Rejected, "REGACK return code " + std::to_string(f.return_code)));
          }
          requests_.erase(it);
        } else if constexpr (std::is_same_v<T, Suback>) {
          auto it = requests_.find(f.msg_id);
          if (it == requests_.end() || !std::holds_alternative<Subscribe>(it->second.frame)) return;
          if (f.return_code == kAccepted) {
            subscribed_[it->second.key] = true;
            if (f.topic_id != 0) topic_names_[f.topic_id] = it->second.key;
          } else {
            request_errors_.insert_or_assign(
                it->second.key, Error(Errc::Rejected, "SUBACK return code " + std::to_string(f.return_code)));
          }
          requests_.erase(it);
        } else if constexpr (std::is_same_v<T, Register>) {
          // broker announces a topic before forwarding on it
          topic_names_[f.topic_id] = f.topic_name;
          send(Regack{f.topic_id, f.msg_id, kAccepted}, now);
        } else if constexpr (std::is_same_v<T, Publish>) {
          rx_.on_publish(f.msg_id, f.topic_id, std::move(f.payload));
          send(Pubrec{f.msg_id}, now);
        } else if constexpr (std::is_same_v<T, Pubrel>) {
          if (auto msg = rx_.on_pubrel(f.msg_id)) {
            try {
              if (auto whole = reassembler_.push(msg->topic_id, msg->payload)) {
                auto name = topic_names_.find(msg->topic_id);
                deliveries_.push_back(
                    {name == topic_names_.end() ? std::string{} : name->second, msg->topic_id, std::move(*whole)});
              }
            } catch (const Error&) {
              ++stats_.malformed;
            }
          }
          send(Pubcomp{f.msg_id}, now);
        } else if constexpr (std::is_same_v<T, Pubrec>) {
          std::vector<Frame> frames;
          sender_.on_pubrec(f.msg_id, now, frames);
          for (const auto& fr : frames) send(fr, now);
        } else if constexpr (std::is_same_v<T, Pubcomp>) {
          std::vector<Qos2Sender::Completion> done;
          if (sender_.on_pubcomp(f.msg_id, now, done)) {
            settle(done);
            pump(now);
          }
        } else if constexpr (std::is_same_v<T, Pingresp>) {
          ping_sent_.reset();
        } else if constexpr (std::is_same_v<T, Pingreq>) {
          send(Pingresp{}, now);
        } else if constexpr (std::is_same_v<T, Disconnect>) {
          // broker confirmation or broker-initiated close
          if (state_ == SessionState::Connected) state_ = SessionState::Disconnected;
        }
      },
      std::move(frame));
}

void ClientSession::handle_datagram(ByteView datagram, Micros now) {
  ++stats_.frames_received;
  stats_.bytes_received += datagram.size();
  Frame frame;
  try {
    frame = parse_frame(datagram);
  } catch (const Error&) {
    ++stats_.malformed;
    return;
  }
  if (state_ == SessionState::Disconnected) return;
  on_frame(std::move(frame), now);
}

void ClientSession::tick(Micros now) {
  const auto& policy = config_.retry;
  if (state_ == SessionState::Connecting && connect_) {
    if (now >= connect_->sent + policy.timeout(connect_->retries)) {
      if (connect_->retries >= policy.control_retries) {
        connect_.reset();
        state_ = SessionState::Disconnected;
        connect_error_ = Error(Errc::Timeout, "no CONNACK from broker");
        return;
      }
      ++connect_->retries;
      ++stats_.retransmissions;
      connect_->sent = now;
      send(connect_->frame, now);
    }
    return;
  }
  if (state_ != SessionState::Connected) return;

  for (auto it = requests_.begin(); it != requests_.end();) {
    auto& p = it->second;
    if (now < p.sent + policy.timeout(p.retries)) {
      ++it;
      continue;
    }
    if (p.retries >= policy.control_retries) {
      request_errors_.insert_or_assign(p.key, Error(Errc::Timeout, "no answer for " + p.key));
      it = requests_.erase(it);
      continue;
    }
    ++p.retries;
    ++stats_.retransmissions;
    p.sent = now;
    if (auto* s = std::get_if<Subscribe>(&p.frame)) s->dup = true;
    send(p.frame, now);
    ++it;
  }
  pump(now);

  const Micros keepalive = std::chrono::seconds(config_.keepalive_s);
  if (config_.keepalive_s > 0 && !ping_sent_ && now >= last_sent_ + keepalive) {
    ping_sent_ = now;
    send(Pingreq{}, now);
  } else if (ping_sent_ && now >= *ping_sent_ + keepalive) {
    ping_sent_.reset();  // unanswered; try again next period
  }
}

std::optional<Micros> ClientSession::next_deadline() const {
  std::optional<Micros> best;
  auto consider = [&](Micros t) {
    if (!best || t < *best) best = t;
  };
  const auto& policy = config_.retry;
  if (state_ == SessionState::Connecting && connect_) consider(connect_->sent + policy.timeout(connect_->retries));
  if (state_ != SessionState::Connected) return best;
  for (const auto& [id, p] : requests_) consider(p.sent + policy.timeout(p.retries));
  if (auto d = sender_.next_deadline(policy)) consider(*d);
  if (config_.keepalive_s > 0) {
    const Micros keepalive = std::chrono::seconds(config_.keepalive_s);
    consider(ping_sent_ ? *ping_sent_ + keepalive : last_sent_ + keepalive);
  }
  return best;
}

std::vector<Bytes> ClientSession::drain_outgoing() { return std::exchange(outbox_, {}); }

std::vector<Delivery> ClientSession::drain_deliveries() { return std::exchange(deliveries_, {}); }

std::vector<PublishAck> ClientSession::poll_acks() { return std::exchange(acks_, {}); }

}  // namespace edgeprov::transport
