#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgeprov/model.hpp"

namespace edgeprov::prov {

/// PROV-DM Agent.
struct WorkflowRecord {
  std::string id;
  std::optional<std::int64_t> start_time;
  std::optional<std::int64_t> end_time;

  bool operator==(const WorkflowRecord&) const = default;
};

enum class TaskStatus { Running, Finished };

/// PROV-DM Activity.
struct TaskRecord {
  std::string id;
  std::string workflow;
  std::vector<std::string> dependencies;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::int64_t> start_time;
  std::optional<std::int64_t> end_time;
  TaskStatus status = TaskStatus::Running;

  bool operator==(const TaskRecord&) const = default;
};

/// PROV-DM Entity.
struct DataRecord {
  std::string id;
  std::string workflow_id;
  std::vector<std::string> derivations;
  std::vector<Attribute> attributes;

  bool operator==(const DataRecord&) const = default;
};

/// Ordered maps, so equality is structural and independent of insertion order.
struct ProvGraph {
  std::map<std::string, WorkflowRecord> workflows;
  std::map<std::string, TaskRecord> tasks;
  std::map<std::string, DataRecord> data;

  bool operator==(const ProvGraph&) const = default;
  bool empty() const noexcept { return workflows.empty() && tasks.empty() && data.empty(); }
};

enum class RelationshipKind {
  WasAssociatedWith,
  WasInformedBy,
  Used,
  WasGeneratedBy,
  WasAttributedTo,
  WasDerivedFrom,
};

inline constexpr RelationshipKind kAllRelationships[] = {
    RelationshipKind::WasAssociatedWith, RelationshipKind::WasInformedBy,  RelationshipKind::Used,
    RelationshipKind::WasGeneratedBy,    RelationshipKind::WasAttributedTo, RelationshipKind::WasDerivedFrom,
};

/// lowerCamelCase PROV name, e.g. "wasGeneratedBy".
std::string_view relationship_name(RelationshipKind kind) noexcept;
std::optional<RelationshipKind> relationship_from_name(std::string_view name) noexcept;

enum class EntityKind { Workflow, Task, Data };

std::string_view to_string(EntityKind kind) noexcept;

struct Violation {
  EntityKind entity_kind = EntityKind::Task;
  std::string entity;
  std::string field;
  std::optional<RelationshipKind> relationship;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

std::string describe(const Violation& v);

/// Non-fatal findings while applying a record (e.g. duplicate attribute keys).
struct ApplyOutcome {
  std::vector<Violation> warnings;
};

/// Folds one record into the graph.
///
/// The graph is untouched when this throws: UnknownTask for a TaskEnd whose
/// task is absent, OrderViolation for workflow-scoped records arriving before
/// their WorkflowBegin. Re-applying a record is a no-op.
ApplyOutcome apply_record(ProvGraph& graph, const CaptureRecord& record);

/// Referential-closure and per-type invariant check. Empty means valid.
std::vector<Violation> validate_graph(const ProvGraph& graph);

/// Applies records and parks the ones that arrive too early, retrying them
/// after every successful apply.
class GraphBuilder {
 public:
  static constexpr std::size_t kDefaultPendingCapacity = 10'000;

  explicit GraphBuilder(std::size_t pending_capacity = kDefaultPendingCapacity) : capacity_(pending_capacity) {}

  struct Report {
    std::size_t applied = 0;  // including pending records released by this call
    std::vector<CaptureRecord> records;  // the applied records, in application order
    std::vector<Violation> warnings;
  };

  /// Throws OrderViolation when the record cannot be applied and the pending
  /// set is already full.
  Report apply(const CaptureRecord& record);

  const ProvGraph& graph() const noexcept { return graph_; }
  std::size_t pending() const noexcept { return pending_.size(); }
  const std::deque<CaptureRecord>& pending_records() const noexcept { return pending_; }

 private:
  void drain(Report& report);

  ProvGraph graph_;
  std::deque<CaptureRecord> pending_;
  std::size_t capacity_;
};

}  // namespace edgeprov::prov
