#include "edgeprov/transport/link.hpp"

#include <algorithm>

#include "edgeprov/error.hpp"

namespace edgeprov::transport {

void LinkConfig::validate() const {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(loss_prob) || !in_unit(dup_prob) || !in_unit(reorder_prob)) {
    throw Error(Errc::InvalidArgument, "link probabilities must lie in [0, 1]");
  }
  if (bandwidth_bps && *bandwidth_bps == 0) throw Error(Errc::InvalidArgument, "bandwidth must be positive");
  if (base_delay.count() < 0) throw Error(Errc::InvalidArgument, "negative base delay");
}

Micros serialization_time(std::size_t bytes, std::optional<std::uint64_t> bandwidth_bps) {
  if (!bandwidth_bps) return Micros{0};
  const auto bits = static_cast<unsigned __int128>(bytes) * 8u * 1'000'000u;
  const auto us = (bits + *bandwidth_bps - 1) / *bandwidth_bps;
  return Micros{static_cast<std::int64_t>(us)};
}

LinkEmulator::LinkEmulator(LinkConfig config) : config_(config), rng_(config.seed) { config_.validate(); }

double LinkEmulator::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

TimedDatagram LinkEmulator::shape(Bytes datagram, Micros now) {
  const auto start = std::max(now, busy_until_);
  busy_until_ = start + serialization_time(datagram.size(), config_.bandwidth_bps);
  ++stats_.delivered;
  stats_.delivered_bytes += datagram.size();
  return {busy_until_ + config_.base_delay, std::move(datagram)};
}

std::vector<TimedDatagram> LinkEmulator::transmit(Bytes datagram, Micros now) {
  ++stats_.offered;
  const double u_loss = uniform();
  const double u_dup = uniform();
  const double u_reorder = uniform();

  Fate fate = script_ ? script_(datagram) : Fate::Random;
  if (fate == Fate::Random) {
    if (u_loss < config_.loss_prob) fate = Fate::Drop;
    else if (u_dup < config_.dup_prob) fate = Fate::Duplicate;
    else fate = Fate::Deliver;
    if (fate != Fate::Drop && u_reorder < config_.reorder_prob && !held_) {
      // keep the duplicate decision, hold the copies
      if (fate == Fate::Duplicate) {
        ++stats_.duplicated;
        held_ = std::vector<Bytes>{datagram, std::move(datagram)};
      } else {
        held_ = std::vector<Bytes>{std::move(datagram)};
      }
      ++stats_.reordered;
      return {};
    }
  }

  std::vector<TimedDatagram> out;
  switch (fate) {
    case Fate::Drop:
      ++stats_.dropped;
      return out;
    case Fate::Reorder:
      if (!held_) {
        ++stats_.reordered;
        held_ = std::vector<Bytes>{std::move(datagram)};
        return out;
      }
      [[fallthrough]];
    case Fate::Deliver:
    case Fate::Random:
      out.push_back(shape(std::move(datagram), now));
      break;
    case Fate::Duplicate:
      ++stats_.duplicated;
      out.push_back(shape(datagram, now));
      out.push_back(shape(std::move(datagram), now));
      break;
  }
  if (held_) {
    for (auto& d : *held_) out.push_back(shape(std::move(d), now));
    held_.reset();
  }
  return out;
}

std::vector<TimedDatagram> LinkEmulator::release_held(Micros now) {
  std::vector<TimedDatagram> out;
  if (held_) {
    for (auto& d : *held_) out.push_back(shape(std::move(d), now));
    held_.reset();
  }
  return out;
}

}  // namespace edgeprov::transport
