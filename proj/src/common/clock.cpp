#include "edgeprov/clock.hpp"

namespace edgeprov {

SteadyClock::SteadyClock()
    : origin_(std::chrono::steady_clock::now()),
      origin_epoch_ms_(std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count()) {}

Micros SteadyClock::now() const {
  return std::chrono::duration_cast<Micros>(std::chrono::steady_clock::now() - origin_);
}

std::int64_t SteadyClock::epoch_ms() const { return origin_epoch_ms_ + now().count() / 1000; }

}  // namespace edgeprov
