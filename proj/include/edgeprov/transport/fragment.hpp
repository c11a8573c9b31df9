#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "edgeprov/bytes.hpp"

namespace edgeprov::transport {

/// Chunk size above which an application payload is split.
inline constexpr std::size_t kMaxFragmentChunk = 1200;

/// Every PUBLISH payload starts with: version u8 (0x01), envelope id u32,
/// fragment index u16, fragment total u16.
inline constexpr std::size_t kFragmentHeaderBytes = 9;
inline constexpr std::uint8_t kFragmentVersion = 0x01;

struct FragmentHeader {
  std::uint32_t envelope_id = 0;
  std::uint16_t index = 0;
  std::uint16_t total = 1;
};

/// Splits `payload` into ceil(size / 1200) fragments (one for an empty
/// payload). InvalidArgument when more than 65,535 fragments would result.
std::vector<Bytes> fragment_payload(ByteView payload, std::uint32_t envelope_id);

/// Malformed on a bad version, index >= total or total == 0.
std::pair<FragmentHeader, ByteView> parse_fragment(ByteView fragment);

/// Rebuilds payloads per (topic, envelope id). Fragments may arrive in any
/// order; duplicates are ignored. The oldest partial payload is evicted once
/// `max_partials` are open.
class Reassembler {
 public:
  explicit Reassembler(std::size_t max_partials = 1024) : max_partials_(max_partials) {}

  /// Complete payload when `fragment` was the last missing piece.
  std::optional<Bytes> push(std::uint16_t topic_id, ByteView fragment);

  std::size_t partials() const noexcept { return partials_.size(); }
  std::size_t evicted() const noexcept { return evicted_; }

 private:
  using Key = std::pair<std::uint16_t, std::uint32_t>;
  struct Partial {
    std::uint16_t total = 0;
    std::size_t received = 0;
    std::vector<std::optional<Bytes>> chunks;
  };

  std::size_t max_partials_;
  std::map<Key, Partial> partials_;
  std::deque<Key> order_;
  std::size_t evicted_ = 0;
};

}  // namespace edgeprov::transport
