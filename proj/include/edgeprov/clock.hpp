#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace edgeprov {

/// Monotonic time, microseconds since the clock's origin.
using Micros = std::chrono::microseconds;

inline constexpr Micros kForever = Micros::max();

inline constexpr double to_ms(Micros t) { return static_cast<double>(t.count()) / 1000.0; }

inline constexpr Micros from_seconds(double s) {
  return Micros{static_cast<std::int64_t>(s * 1'000'000.0 + (s >= 0 ? 0.5 : -0.5))};
}

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Micros now() const = 0;
  /// Epoch milliseconds corresponding to now(); the mapping is fixed when the clock is built.
  virtual std::int64_t epoch_ms() const = 0;
};

class SteadyClock final : public Clock {
 public:
  SteadyClock();
  Micros now() const override;
  std::int64_t epoch_ms() const override;

 private:
  std::chrono::steady_clock::time_point origin_;
  std::int64_t origin_epoch_ms_;
};

/// Manually advanced clock for deterministic runs.
class VirtualClock final : public Clock {
 public:
  static constexpr std::int64_t kDefaultEpochMs = 1'700'000'000'000;

  explicit VirtualClock(std::int64_t epoch_at_zero_ms = kDefaultEpochMs) : epoch_zero_(epoch_at_zero_ms) {}

  Micros now() const override { return Micros{now_.load(std::memory_order_acquire)}; }
  std::int64_t epoch_ms() const override { return epoch_zero_ + now().count() / 1000; }

  void advance_to(Micros t) {
    if (t.count() > now_.load()) now_.store(t.count(), std::memory_order_release);
  }

 private:
  std::atomic<std::int64_t> now_{0};
  std::int64_t epoch_zero_;
};

}  // namespace edgeprov
