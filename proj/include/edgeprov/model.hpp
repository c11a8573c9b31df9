#pragma once

// Capture-side value types shared by the wire codec, the graph model and the
// capture library.

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace edgeprov {

/// Attribute value. Index order matches the wire tags minus one
/// (0x01 string, 0x02 int64, 0x03 float64, 0x04 bool).
using Scalar = std::variant<std::string, std::int64_t, double, bool>;

struct Attribute {
  std::string key;
  Scalar value;

  bool operator==(const Attribute&) const = default;
};

/// A data record as carried inside a capture record. The owning workflow is
/// implied by the enclosing record.
struct DataPayload {
  std::string id;
  std::vector<std::string> derivations;
  std::vector<Attribute> attributes;

  bool operator==(const DataPayload&) const = default;
};

enum class RecordKind : std::uint8_t {
  WorkflowBegin = 0x01,
  WorkflowEnd = 0x02,
  TaskBegin = 0x03,
  TaskEnd = 0x04,
};

std::string_view to_string(RecordKind kind) noexcept;

/// One provenance event: the unit of capture.
struct CaptureRecord {
  RecordKind kind = RecordKind::WorkflowBegin;
  std::string workflow_id;
  std::string task_id;                    // empty for workflow kinds
  std::vector<std::string> dependencies;  // TaskBegin only
  std::vector<DataPayload> data;          // inputs (TaskBegin) or outputs (TaskEnd)
  std::int64_t timestamp = 0;             // epoch ms

  bool operator==(const CaptureRecord&) const = default;

  static CaptureRecord workflow_begin(std::string workflow, std::int64_t t) {
    return {RecordKind::WorkflowBegin, std::move(workflow), {}, {}, {}, t};
  }
  static CaptureRecord workflow_end(std::string workflow, std::int64_t t) {
    return {RecordKind::WorkflowEnd, std::move(workflow), {}, {}, {}, t};
  }
  static CaptureRecord task_begin(std::string workflow, std::string task, std::vector<std::string> deps,
                                  std::vector<DataPayload> inputs, std::int64_t t) {
    return {RecordKind::TaskBegin, std::move(workflow), std::move(task), std::move(deps), std::move(inputs), t};
  }
  static CaptureRecord task_end(std::string workflow, std::string task, std::vector<DataPayload> outputs,
                                std::int64_t t) {
    return {RecordKind::TaskEnd, std::move(workflow), std::move(task), {}, std::move(outputs), t};
  }
};

/// True when the per-kind shape rules hold (task kinds carry a task id,
/// workflow kinds carry nothing else, only TaskBegin carries dependencies).
bool is_well_formed(const CaptureRecord& record) noexcept;

}  // namespace edgeprov
