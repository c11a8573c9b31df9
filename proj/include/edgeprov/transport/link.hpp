#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "edgeprov/bytes.hpp"
#include "edgeprov/clock.hpp"

namespace edgeprov::transport {

struct LinkConfig {
  double loss_prob = 0.0;
  double dup_prob = 0.0;
  double reorder_prob = 0.0;
  std::optional<std::uint64_t> bandwidth_bps;  // nullopt = unlimited
  Micros base_delay{0};
  std::uint64_t seed = 1;

  /// InvalidArgument for probabilities outside [0, 1] or a zero bandwidth.
  void validate() const;
};

struct TimedDatagram {
  Micros deliver_at{0};
  Bytes datagram;
};

/// Per-datagram override used by scripted fault tests. Random lets the
/// configured probabilities decide.
enum class Fate { Random, Deliver, Drop, Duplicate, Reorder };

/// One direction of an emulated network path.
///
/// Per datagram: loss, then duplication, then reordering (hold until the next
/// datagram and emit after it), then shaping. Shaping serializes datagrams
/// on the link: transmission starts at max(now, busy_until), occupies
/// bits / bandwidth, and arrives base_delay after it finishes.
/// Three uniform draws are consumed per datagram whatever the outcome, so a
/// seed fixes the whole fate sequence.
class LinkEmulator {
 public:
  explicit LinkEmulator(LinkConfig config);

  std::vector<TimedDatagram> transmit(Bytes datagram, Micros now);

  /// Releases a datagram held for reordering, if any.
  std::vector<TimedDatagram> release_held(Micros now);

  void set_script(std::function<Fate(ByteView)> script) { script_ = std::move(script); }

  const LinkConfig& config() const noexcept { return config_; }

  struct Stats {
    std::uint64_t offered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t duplicated = 0;
    std::uint64_t reordered = 0;
    std::uint64_t delivered = 0;
    std::uint64_t delivered_bytes = 0;
  };
  const Stats& stats() const noexcept { return stats_; }

  /// Time the link finishes serializing everything accepted so far.
  Micros busy_until() const noexcept { return busy_until_; }

 private:
  double uniform();
  TimedDatagram shape(Bytes datagram, Micros now);

  LinkConfig config_;
  std::mt19937_64 rng_;
  Micros busy_until_{0};
  std::optional<std::vector<Bytes>> held_;
  std::function<Fate(ByteView)> script_;
  Stats stats_;
};

/// Transmission time of `bytes` at `bandwidth_bps`, rounded up to whole microseconds.
Micros serialization_time(std::size_t bytes, std::optional<std::uint64_t> bandwidth_bps);

}  // namespace edgeprov::transport
