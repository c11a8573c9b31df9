#pragma once

#include <cstddef>
#include <vector>

#include "edgeprov/model.hpp"

namespace edgeprov::wire {

/// Batches TaskEnd records into groups of exactly `group_size`. Every other
/// record kind, and everything when the group size is 0, passes straight
/// through so started tasks stay visible while the workflow runs.
class GroupingBuffer {
 public:
  explicit GroupingBuffer(std::size_t group_size = 0) : group_size_(group_size) {}

  /// Records to transmit now, in order. Empty while a batch is filling.
  std::vector<CaptureRecord> push(CaptureRecord record);

  /// Drains whatever is pending, in arrival order.
  std::vector<CaptureRecord> flush();

  std::size_t group_size() const noexcept { return group_size_; }
  std::size_t pending() const noexcept { return pending_.size(); }

 private:
  std::size_t group_size_;
  std::vector<CaptureRecord> pending_;
};

/// Envelopes produced by a workflow of `tasks` begin/end pairs:
/// 2 + T + ceil(T/G) when grouping, 2 + 2T otherwise.
constexpr std::size_t expected_envelopes(std::size_t tasks, std::size_t group_size) {
  if (group_size == 0) return 2 + 2 * tasks;
  return 2 + tasks + (tasks + group_size - 1) / group_size;
}

}  // namespace edgeprov::wire
