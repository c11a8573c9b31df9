#pragma once

// Exactly-once (QoS 2) handshake pieces shared by the broker and clients.
//
// Sender:   PUBLISH -> (PUBREC) -> PUBREL -> (PUBCOMP)
// Receiver: holds the payload on PUBLISH, releases it to the application on
//           PUBREL, so a duplicated PUBLISH can never deliver twice.

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <unordered_set>
#include <vector>

#include "edgeprov/bytes.hpp"
#include "edgeprov/clock.hpp"
#include "edgeprov/transport/frame.hpp"

namespace edgeprov::transport {

using namespace std::chrono_literals;

struct RetryPolicy {
  Micros initial = 250ms;
  Micros cap = 4s;
  int max_retries = 10;
  // CONNECT/REGISTER/SUBSCRIBE give up after this many retransmissions:
  // 0.25 + 0.5 + 1 + 2 = 3.75 s with the defaults.
  int control_retries = 3;

  /// Wait before retransmission number `attempt + 1` (exponential, capped).
  Micros timeout(int attempt) const;
};

/// 16-bit message id counter that skips 0 and ids still in use.
class MsgIdAllocator {
 public:
  std::uint16_t next(const std::function<bool(std::uint16_t)>& in_use);
  void reset() noexcept { next_ = 1; }

 private:
  std::uint16_t next_ = 1;
};

enum class TxPhase { AwaitPubrec, AwaitPubcomp };

struct Qos2TxState {
  std::uint16_t msg_id = 0;
  TxPhase phase = TxPhase::AwaitPubrec;
  std::uint16_t topic_id = 0;
  Bytes payload;
  std::uint64_t tag = 0;
  Micros last_sent{0};
  int retries = 0;
};

/// Smoothed round-trip estimate in the style of TCP's retransmission timer.
/// Samples come only from frames that were never retransmitted.
class RttEstimator {
 public:
  void sample(Micros rtt);
  /// srtt + 4 * rttvar, at least policy.initial; policy.initial before any sample.
  Micros base(const RetryPolicy& policy) const;
  /// base doubled per attempt, capped.
  Micros timeout(const RetryPolicy& policy, int attempt) const;
  std::optional<Micros> srtt() const noexcept { return srtt_; }

 private:
  std::optional<Micros> srtt_;
  Micros rttvar_{0};
};

/// Stop-and-wait sender over a FIFO: at most one message in flight, so
/// messages leave (and arrive) in enqueue order.
class Qos2Sender {
 public:
  struct Item {
    std::uint16_t topic_id = 0;
    Bytes payload;
    std::uint64_t tag = 0;  // caller's correlation id
  };
  struct Completion {
    std::uint64_t tag = 0;
    bool delivered = false;  // false = retries exhausted
  };

  void enqueue(Item item) { queue_.push_back(std::move(item)); }

  /// Starts the next message when idle and retransmits on timeout.
  void poll(Micros now, const RetryPolicy& policy, MsgIdAllocator& ids,
            const std::function<bool(std::uint16_t)>& in_use, std::vector<Frame>& out,
            std::vector<Completion>& done);

  /// True when the frame belonged to this sender.
  bool on_pubrec(std::uint16_t msg_id, Micros now, std::vector<Frame>& out);
  bool on_pubcomp(std::uint16_t msg_id, Micros now, std::vector<Completion>& done);

  std::optional<Micros> next_deadline(const RetryPolicy& policy) const;
  bool idle() const noexcept { return !inflight_ && queue_.empty(); }
  std::size_t backlog() const noexcept { return queue_.size() + (inflight_ ? 1 : 0); }
  const std::optional<Qos2TxState>& inflight() const noexcept { return inflight_; }
  std::uint64_t retransmissions() const noexcept { return retransmissions_; }
  const RttEstimator& rtt() const noexcept { return rtt_; }
  void clear() {
    queue_.clear();
    inflight_.reset();
  }
  /// Drops queued (not yet started) items carrying `tag`.
  void drop_queued(std::uint64_t tag);

 private:
  std::deque<Item> queue_;
  std::optional<Qos2TxState> inflight_;
  std::uint64_t retransmissions_ = 0;
  RttEstimator rtt_;
};

struct HeldMessage {
  std::uint16_t topic_id = 0;
  Bytes payload;
};

/// Receiver side. `completed` remembers the most recent finished msg ids so
/// late duplicates of a finished PUBLISH are acknowledged without being held
/// again; ids age out of the window long before a sender can wrap around.
class Qos2Receiver {
 public:
  Qos2Receiver() : Qos2Receiver(1024) {}
  explicit Qos2Receiver(std::size_t completed_window) : window_(completed_window) {}

  /// Always answer with PUBREC. True when the payload was newly held.
  bool on_publish(std::uint16_t msg_id, std::uint16_t topic_id, Bytes payload);
  /// Always answer with PUBCOMP. Returns the message to deliver, at most once.
  std::optional<HeldMessage> on_pubrel(std::uint16_t msg_id);

  std::size_t held() const noexcept { return held_.size(); }
  bool is_held(std::uint16_t msg_id) const { return held_.contains(msg_id); }
  bool is_completed(std::uint16_t msg_id) const { return completed_.contains(msg_id); }
  void clear();

 private:
  std::size_t window_;
  std::map<std::uint16_t, HeldMessage> held_;
  std::unordered_set<std::uint16_t> completed_;
  std::deque<std::uint16_t> completed_order_;
};

}  // namespace edgeprov::transport
