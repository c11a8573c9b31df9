#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgeprov/model.hpp"
#include "edgeprov/prov/graph.hpp"

namespace edgeprov::prov {

struct Agent {
  std::string id;
  std::optional<std::int64_t> start_time;
  std::optional<std::int64_t> end_time;

  bool operator==(const Agent&) const = default;
};

struct Activity {
  std::string id;
  std::optional<std::int64_t> start_time;
  std::optional<std::int64_t> end_time;
  TaskStatus status = TaskStatus::Running;

  bool operator==(const Activity&) const = default;
};

struct Entity {
  std::string id;
  std::vector<Attribute> attributes;

  bool operator==(const Entity&) const = default;
};

struct Statement {
  RelationshipKind kind = RelationshipKind::Used;
  std::string subject;
  std::string object;

  bool operator==(const Statement&) const = default;
};

/// Generic PROV-DM view of a graph: one agent per workflow, one activity per
/// task, one entity per data record and one statement per relationship edge.
struct ProvDocument {
  std::vector<Agent> agents;
  std::vector<Activity> activities;
  std::vector<Entity> entities;
  std::vector<Statement> statements;
  bool incomplete = false;  // persisted before its WorkflowEnd arrived

  bool operator==(const ProvDocument&) const = default;

  std::size_t count(RelationshipKind kind) const;
};

/// Throws InvalidGraph when validate_graph reports anything.
ProvDocument export_prov(const ProvGraph& graph);

/// Same mapping without the validity precondition; used to snapshot
/// workflows that never completed.
ProvDocument export_prov_unchecked(const ProvGraph& graph);

/// Keys in the order agents, activities, entities, statements. Statement
/// objects are {"kind", "subject", "object"}. "incomplete" is only written
/// when set.
std::string to_json(const ProvDocument& doc, int indent = 2);
/// Malformed on anything that does not match the layout above.
ProvDocument document_from_json(std::string_view text);

}  // namespace edgeprov::prov
