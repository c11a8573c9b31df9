#include "edgeprov/wire/grouping.hpp"

#include <utility>

namespace edgeprov::wire {

std::vector<CaptureRecord> GroupingBuffer::push(CaptureRecord record) {
  std::vector<CaptureRecord> send_now;
  if (record.kind != RecordKind::TaskEnd || group_size_ == 0) {
    send_now.push_back(std::move(record));
    return send_now;
  }
  pending_.push_back(std::move(record));
  if (pending_.size() == group_size_) send_now.swap(pending_);
  return send_now;
}

std::vector<CaptureRecord> GroupingBuffer::flush() {
  std::vector<CaptureRecord> out;
  out.swap(pending_);
  return out;
}

}  // namespace edgeprov::wire
