#include "edgeprov/prov/graph.hpp"

#include <algorithm>
#include <set>

#include "edgeprov/error.hpp"

namespace edgeprov::prov {

std::string_view relationship_name(RelationshipKind kind) noexcept {
  switch (kind) {
    case RelationshipKind::WasAssociatedWith: return "wasAssociatedWith";
    case RelationshipKind::WasInformedBy: return "wasInformedBy";
    case RelationshipKind::Used: return "used";
    case RelationshipKind::WasGeneratedBy: return "wasGeneratedBy";
    case RelationshipKind::WasAttributedTo: return "wasAttributedTo";
    case RelationshipKind::WasDerivedFrom: return "wasDerivedFrom";
  }
  return "?";
}

std::optional<RelationshipKind> relationship_from_name(std::string_view name) noexcept {
  for (auto kind : kAllRelationships) {
    if (relationship_name(kind) == name) return kind;
  }
  return std::nullopt;
}

std::string_view to_string(EntityKind kind) noexcept {
  switch (kind) {
    case EntityKind::Workflow: return "workflow";
    case EntityKind::Task: return "task";
    case EntityKind::Data: return "data";
  }
  return "?";
}

std::string describe(const Violation& v) {
  std::string s = std::string(to_string(v.entity_kind)) + " '" + v.entity + "' field '" + v.field + "'";
  if (v.relationship) s += " (" + std::string(relationship_name(*v.relationship)) + ")";
  if (!v.detail.empty()) s += ": " + v.detail;
  return s;
}

namespace {

void append_unique(std::vector<std::string>& into, const std::vector<std::string>& items) {
  for (const auto& item : items) {
    if (std::find(into.begin(), into.end(), item) == into.end()) into.push_back(item);
  }
}

// Collapses duplicate keys inside one payload: the last occurrence wins but
// keeps the position of the first.
std::vector<Attribute> collapse_attributes(const DataPayload& payload, std::vector<Violation>& warnings) {
  std::vector<Attribute> out;
  out.reserve(payload.attributes.size());
  for (const auto& attr : payload.attributes) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Attribute& a) { return a.key == attr.key; });
    if (it == out.end()) {
      out.push_back(attr);
    } else {
      it->value = attr.value;
      warnings.push_back({EntityKind::Data, payload.id, "attributes", std::nullopt,
                          "duplicate attribute key '" + attr.key + "', last value kept"});
    }
  }
  return out;
}

// Entities are immutable once captured: an existing record only gains
// derivations and attribute keys it did not already have.
void upsert_data(ProvGraph& g, const std::string& workflow, const DataPayload& payload,
                 std::vector<Violation>& warnings) {
  auto attrs = collapse_attributes(payload, warnings);
  auto [it, inserted] = g.data.try_emplace(payload.id);
  auto& rec = it->second;
  if (inserted) {
    rec.id = payload.id;
    rec.workflow_id = workflow;
    append_unique(rec.derivations, payload.derivations);
    rec.attributes = std::move(attrs);
    return;
  }
  append_unique(rec.derivations, payload.derivations);
  for (auto& attr : attrs) {
    auto found = std::find_if(rec.attributes.begin(), rec.attributes.end(),
                              [&](const Attribute& a) { return a.key == attr.key; });
    if (found == rec.attributes.end()) rec.attributes.push_back(std::move(attr));
  }
}

std::vector<std::string> ids_of(const std::vector<DataPayload>& data) {
  std::vector<std::string> ids;
  ids.reserve(data.size());
  for (const auto& d : data) ids.push_back(d.id);
  return ids;
}

}  // namespace

ApplyOutcome apply_record(ProvGraph& g, const CaptureRecord& r) {
  ApplyOutcome outcome;
  switch (r.kind) {
    case RecordKind::WorkflowBegin: {
      auto& wf = g.workflows[r.workflow_id];
      wf.id = r.workflow_id;
      if (!wf.start_time) wf.start_time = r.timestamp;
      break;
    }
    case RecordKind::WorkflowEnd: {
      auto it = g.workflows.find(r.workflow_id);
      if (it == g.workflows.end() || !it->second.start_time) {
        throw Error(Errc::OrderViolation, "WorkflowEnd before WorkflowBegin for '" + r.workflow_id + "'");
      }
      if (!it->second.end_time) it->second.end_time = r.timestamp;
      break;
    }
    case RecordKind::TaskBegin: {
      if (!g.workflows.contains(r.workflow_id)) {
        throw Error(Errc::OrderViolation, "TaskBegin '" + r.task_id + "' before WorkflowBegin");
      }
      auto [it, inserted] = g.tasks.try_emplace(r.task_id);
      if (inserted) {
        auto& task = it->second;
        task.id = r.task_id;
        task.workflow = r.workflow_id;
        task.dependencies = r.dependencies;
        task.inputs = ids_of(r.data);
        task.start_time = r.timestamp;
        task.status = TaskStatus::Running;
      }
      for (const auto& d : r.data) upsert_data(g, r.workflow_id, d, outcome.warnings);
      break;
    }
    case RecordKind::TaskEnd: {
      auto it = g.tasks.find(r.task_id);
      if (it == g.tasks.end()) throw Error(Errc::UnknownTask, "TaskEnd for unknown task '" + r.task_id + "'");
      auto& task = it->second;
      if (task.status != TaskStatus::Finished) {
        task.end_time = r.timestamp;
        task.status = TaskStatus::Finished;
        task.outputs = ids_of(r.data);
      }
      for (const auto& d : r.data) upsert_data(g, r.workflow_id, d, outcome.warnings);
      break;
    }
  }
  return outcome;
}

std::vector<Violation> validate_graph(const ProvGraph& g) {
  std::vector<Violation> out;
  auto add = [&](EntityKind kind, const std::string& id, std::string field, std::optional<RelationshipKind> rel,
                 std::string detail) {
    out.push_back({kind, id, std::move(field), rel, std::move(detail)});
  };

  for (const auto& [key, wf] : g.workflows) {
    if (wf.id.empty() || wf.id != key) add(EntityKind::Workflow, key, "id", std::nullopt, "empty or mismatched id");
    if (wf.end_time && !wf.start_time) add(EntityKind::Workflow, key, "end_time", std::nullopt, "end without start");
    if (wf.end_time && wf.start_time && *wf.end_time < *wf.start_time) {
      add(EntityKind::Workflow, key, "end_time", std::nullopt, "end before start");
    }
  }

  for (const auto& [key, t] : g.tasks) {
    if (t.id.empty() || t.id != key) add(EntityKind::Task, key, "id", std::nullopt, "empty or mismatched id");
    if (t.workflow.empty()) {
      add(EntityKind::Task, key, "workflow", RelationshipKind::WasAssociatedWith, "empty workflow id");
    } else if (!g.workflows.contains(t.workflow)) {
      add(EntityKind::Task, key, "workflow", RelationshipKind::WasAssociatedWith, "missing " + t.workflow);
    }
    for (const auto& dep : t.dependencies) {
      if (dep == t.id) {
        add(EntityKind::Task, key, "dependencies", RelationshipKind::WasInformedBy, "self reference");
      } else if (!g.tasks.contains(dep)) {
        add(EntityKind::Task, key, "dependencies", RelationshipKind::WasInformedBy, "missing " + dep);
      }
    }
    for (const auto& in : t.inputs) {
      if (!g.data.contains(in)) add(EntityKind::Task, key, "inputs", RelationshipKind::Used, "missing " + in);
    }
    for (const auto& o : t.outputs) {
      if (!g.data.contains(o)) add(EntityKind::Task, key, "outputs", RelationshipKind::WasGeneratedBy, "missing " + o);
      if (std::find(t.inputs.begin(), t.inputs.end(), o) != t.inputs.end()) {
        add(EntityKind::Task, key, "outputs", RelationshipKind::WasGeneratedBy, o + " is both input and output");
      }
    }
    const bool finished = t.status == TaskStatus::Finished;
    if (finished != t.end_time.has_value()) {
      add(EntityKind::Task, key, "status", std::nullopt, "status disagrees with end_time");
    }
    if (!t.start_time) add(EntityKind::Task, key, "start_time", std::nullopt, "missing start time");
    if (t.start_time && t.end_time && *t.end_time < *t.start_time) {
      add(EntityKind::Task, key, "end_time", std::nullopt, "end before start");
    }
  }

  for (const auto& [key, d] : g.data) {
    if (d.id.empty() || d.id != key) add(EntityKind::Data, key, "id", std::nullopt, "empty or mismatched id");
    if (d.workflow_id.empty()) {
      add(EntityKind::Data, key, "workflow_id", RelationshipKind::WasAttributedTo, "empty workflow id");
    } else if (!g.workflows.contains(d.workflow_id)) {
      add(EntityKind::Data, key, "workflow_id", RelationshipKind::WasAttributedTo, "missing " + d.workflow_id);
    }
    for (const auto& src : d.derivations) {
      if (src == d.id) {
        add(EntityKind::Data, key, "derivations", RelationshipKind::WasDerivedFrom, "self reference");
      } else if (!g.data.contains(src)) {
        add(EntityKind::Data, key, "derivations", RelationshipKind::WasDerivedFrom, "missing " + src);
      }
    }
    std::set<std::string_view> keys;
    for (const auto& a : d.attributes) {
      if (!keys.insert(a.key).second) {
        add(EntityKind::Data, key, "attributes", std::nullopt, "duplicate key " + a.key);
      }
    }
  }
  return out;
}

GraphBuilder::Report GraphBuilder::apply(const CaptureRecord& record) {
  Report report;
  try {
    auto outcome = apply_record(graph_, record);
    ++report.applied;
    report.records.push_back(record);
    report.warnings = std::move(outcome.warnings);
  } catch (const Error& e) {
    if (e.code() != Errc::UnknownTask && e.code() != Errc::OrderViolation) throw;
    if (pending_.size() >= capacity_) {
      throw Error(Errc::OrderViolation, "pending set full (" + std::to_string(capacity_) + " records)");
    }
    pending_.push_back(record);
    return report;
  }
  drain(report);
  return report;
}

void GraphBuilder::drain(Report& report) {
  bool progress = true;
  while (progress && !pending_.empty()) {
    progress = false;
    for (auto it = pending_.begin(); it != pending_.end();) {
      try {
        auto outcome = apply_record(graph_, *it);
        ++report.applied;
        report.records.push_back(std::move(*it));
        for (auto& w : outcome.warnings) report.warnings.push_back(std::move(w));
        it = pending_.erase(it);
        progress = true;
      } catch (const Error&) {
        ++it;
      }
    }
  }
}

}  // namespace edgeprov::prov
