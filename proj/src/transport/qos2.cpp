#include "edgeprov/transport/qos2.hpp"

#include <algorithm>

#include "edgeprov/error.hpp"

namespace edgeprov::transport {

Micros RetryPolicy::timeout(int attempt) const {
  Micros t = initial;
  for (int i = 0; i < attempt && t < cap; ++i) t *= 2;
  return std::min(t, cap);
}

std::uint16_t MsgIdAllocator::next(const std::function<bool(std::uint16_t)>& in_use) {
  for (int tries = 0; tries < 0x10000; ++tries) {
    const auto id = next_;
    next_ = static_cast<std::uint16_t>(next_ == 0xFFFF ? 1 : next_ + 1);
    if (id != 0 && !in_use(id)) return id;
  }
  throw Error(Errc::TooManyItems, "all message ids in use");
}

void RttEstimator::sample(Micros rtt) {
  if (!srtt_) {
    srtt_ = rtt;
    rttvar_ = rtt / 2;
    return;
  }
  const auto err = rtt > *srtt_ ? rtt - *srtt_ : *srtt_ - rtt;
  rttvar_ = (3 * rttvar_ + err) / 4;
  srtt_ = (7 * *srtt_ + rtt) / 8;
}

Micros RttEstimator::base(const RetryPolicy& policy) const {
  if (!srtt_) return policy.initial;
  return std::clamp(*srtt_ + 4 * rttvar_, policy.initial, policy.cap);
}

Micros RttEstimator::timeout(const RetryPolicy& policy, int attempt) const {
  Micros t = base(policy);
  for (int i = 0; i < attempt && t < policy.cap; ++i) t *= 2;
  return std::min(t, policy.cap);
}

void Qos2Sender::poll(Micros now, const RetryPolicy& policy, MsgIdAllocator& ids,
                      const std::function<bool(std::uint16_t)>& in_use, std::vector<Frame>& out,
                      std::vector<Completion>& done) {
  while (true) {
    if (!inflight_) {
      if (queue_.empty()) return;
      auto item = std::move(queue_.front());
      queue_.pop_front();
      Qos2TxState tx;
      tx.msg_id = ids.next(in_use);
      tx.topic_id = item.topic_id;
      tx.payload = std::move(item.payload);
      tx.tag = item.tag;
      tx.last_sent = now;
      out.push_back(Publish{false, tx.topic_id, tx.msg_id, tx.payload});
      inflight_ = std::move(tx);
      return;
    }
    auto& tx = *inflight_;
    if (now < tx.last_sent + rtt_.timeout(policy, tx.retries)) return;
    if (tx.retries >= policy.max_retries) {
      done.push_back({tx.tag, false});
      inflight_.reset();
      continue;  // move on to the next queued message
    }
    ++tx.retries;
    ++retransmissions_;
    tx.last_sent = now;
    if (tx.phase == TxPhase::AwaitPubrec) {
      out.push_back(Publish{true, tx.topic_id, tx.msg_id, tx.payload});
    } else {
      out.push_back(Pubrel{tx.msg_id});
    }
    return;
  }
}

bool Qos2Sender::on_pubrec(std::uint16_t msg_id, Micros now, std::vector<Frame>& out) {
  if (!inflight_ || inflight_->msg_id != msg_id) return false;
  auto& tx = *inflight_;
  if (tx.phase == TxPhase::AwaitPubrec) {
    if (tx.retries == 0) rtt_.sample(now - tx.last_sent);
    tx.phase = TxPhase::AwaitPubcomp;
    tx.retries = 0;
    tx.payload.clear();
    tx.payload.shrink_to_fit();
  }
  // A repeated PUBREC means our PUBREL was lost; answer it again.
  tx.last_sent = now;
  out.push_back(Pubrel{msg_id});
  return true;
}

bool Qos2Sender::on_pubcomp(std::uint16_t msg_id, Micros now, std::vector<Completion>& done) {
  if (!inflight_ || inflight_->msg_id != msg_id || inflight_->phase != TxPhase::AwaitPubcomp) return false;
  if (inflight_->retries == 0) rtt_.sample(now - inflight_->last_sent);
  done.push_back({inflight_->tag, true});
  inflight_.reset();
  return true;
}

std::optional<Micros> Qos2Sender::next_deadline(const RetryPolicy& policy) const {
  if (inflight_) return inflight_->last_sent + rtt_.timeout(policy, inflight_->retries);
  return std::nullopt;
}

void Qos2Sender::drop_queued(std::uint64_t tag) {
  std::erase_if(queue_, [&](const Item& i) { return i.tag == tag; });
}

bool Qos2Receiver::on_publish(std::uint16_t msg_id, std::uint16_t topic_id, Bytes payload) {
  if (held_.contains(msg_id) || completed_.contains(msg_id)) return false;
  held_.emplace(msg_id, HeldMessage{topic_id, std::move(payload)});
  return true;
}

std::optional<HeldMessage> Qos2Receiver::on_pubrel(std::uint16_t msg_id) {
  auto it = held_.find(msg_id);
  if (it == held_.end()) return std::nullopt;
  HeldMessage msg = std::move(it->second);
  held_.erase(it);
  completed_.insert(msg_id);
  completed_order_.push_back(msg_id);
  while (completed_order_.size() > window_) {
    completed_.erase(completed_order_.front());
    completed_order_.pop_front();
  }
  return msg;
}

void Qos2Receiver::clear() {
  held_.clear();
  completed_.clear();
  completed_order_.clear();
}

}  // namespace edgeprov::transport
