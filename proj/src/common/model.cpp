#include "edgeprov/model.hpp"

namespace edgeprov {

std::string_view to_string(RecordKind kind) noexcept {
  switch (kind) {
    case RecordKind::WorkflowBegin: return "WorkflowBegin";
    case RecordKind::WorkflowEnd: return "WorkflowEnd";
    case RecordKind::TaskBegin: return "TaskBegin";
    case RecordKind::TaskEnd: return "TaskEnd";
  }
  return "?";
}

bool is_well_formed(const CaptureRecord& r) noexcept {
  if (r.workflow_id.empty()) return false;
  switch (r.kind) {
    case RecordKind::WorkflowBegin:
    case RecordKind::WorkflowEnd:
      return r.task_id.empty() && r.data.empty() && r.dependencies.empty();
    case RecordKind::TaskBegin:
      return !r.task_id.empty();
    case RecordKind::TaskEnd:
      return !r.task_id.empty() && r.dependencies.empty();
  }
  return false;
}

}  // namespace edgeprov
