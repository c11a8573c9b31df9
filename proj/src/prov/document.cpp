#include "edgeprov/prov/document.hpp"

#include <algorithm>
#include <tuple>

#include "edgeprov/error.hpp"
#include "edgeprov/json.hpp"

namespace edgeprov::prov {

std::size_t ProvDocument::count(RelationshipKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(statements.begin(), statements.end(), [&](const Statement& s) { return s.kind == kind; }));
}

ProvDocument export_prov_unchecked(const ProvGraph& g) {
  ProvDocument doc;
  for (const auto& [id, wf] : g.workflows) doc.agents.push_back({id, wf.start_time, wf.end_time});
  for (const auto& [id, t] : g.tasks) {
    doc.activities.push_back({id, t.start_time, t.end_time, t.status});
    doc.statements.push_back({RelationshipKind::WasAssociatedWith, id, t.workflow});
    for (const auto& dep : t.dependencies) doc.statements.push_back({RelationshipKind::WasInformedBy, id, dep});
    for (const auto& in : t.inputs) doc.statements.push_back({RelationshipKind::Used, id, in});
    for (const auto& out : t.outputs) doc.statements.push_back({RelationshipKind::WasGeneratedBy, out, id});
  }
  for (const auto& [id, d] : g.data) {
    doc.entities.push_back({id, d.attributes});
    doc.statements.push_back({RelationshipKind::WasAttributedTo, id, d.workflow_id});
    for (const auto& src : d.derivations) doc.statements.push_back({RelationshipKind::WasDerivedFrom, id, src});
  }
  std::sort(doc.statements.begin(), doc.statements.end(), [](const Statement& a, const Statement& b) {
    return std::tie(a.subject, a.kind, a.object) < std::tie(b.subject, b.kind, b.object);
  });
  return doc;
}

ProvDocument export_prov(const ProvGraph& g) {
  auto violations = validate_graph(g);
  if (!violations.empty()) {
    throw Error(Errc::InvalidGraph, std::to_string(violations.size()) + " violation(s), first: " +
                                        describe(violations.front()));
  }
  return export_prov_unchecked(g);
}

namespace {

Json optional_time(const std::optional<std::int64_t>& t) { return t ? Json(*t) : Json(nullptr); }

std::optional<std::int64_t> time_from(const Json& obj, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return obj.at(key).get<std::int64_t>();
}

}  // namespace

std::string to_json(const ProvDocument& doc, int indent) {
  Json j = Json::object();
  Json agents = Json::array();
  for (const auto& a : doc.agents) {
    agents.push_back(Json{{"id", a.id}, {"startTime", optional_time(a.start_time)}, {"endTime", optional_time(a.end_time)}});
  }
  Json activities = Json::array();
  for (const auto& a : doc.activities) {
    activities.push_back(Json{{"id", a.id},
                              {"startTime", optional_time(a.start_time)},
                              {"endTime", optional_time(a.end_time)},
                              {"status", a.status == TaskStatus::Finished ? "finished" : "running"}});
  }
  Json entities = Json::array();
  for (const auto& e : doc.entities) {
    entities.push_back(Json{{"id", e.id}, {"attributes", attributes_to_json(e.attributes)}});
  }
  Json statements = Json::array();
  for (const auto& s : doc.statements) {
    statements.push_back(
        Json{{"kind", std::string(relationship_name(s.kind))}, {"subject", s.subject}, {"object", s.object}});
  }
  j["agents"] = std::move(agents);
  j["activities"] = std::move(activities);
  j["entities"] = std::move(entities);
  j["statements"] = std::move(statements);
  if (doc.incomplete) j["incomplete"] = true;
  return j.dump(indent);
}

ProvDocument document_from_json(std::string_view text) {
  try {
    const auto j = Json::parse(text);
    ProvDocument doc;
    for (const auto& a : j.at("agents")) {
      doc.agents.push_back({a.at("id").get<std::string>(), time_from(a, "startTime"), time_from(a, "endTime")});
    }
    for (const auto& a : j.at("activities")) {
      const auto status = a.at("status").get<std::string>();
      if (status != "finished" && status != "running") throw Error(Errc::Malformed, "bad status " + status);
      doc.activities.push_back({a.at("id").get<std::string>(), time_from(a, "startTime"), time_from(a, "endTime"),
                                status == "finished" ? TaskStatus::Finished : TaskStatus::Running});
    }
    for (const auto& e : j.at("entities")) {
      doc.entities.push_back({e.at("id").get<std::string>(), attributes_from_json(e.at("attributes"))});
    }
    for (const auto& s : j.at("statements")) {
      auto kind = relationship_from_name(s.at("kind").get<std::string>());
      if (!kind) throw Error(Errc::Malformed, "unknown statement kind");
      doc.statements.push_back({*kind, s.at("subject").get<std::string>(), s.at("object").get<std::string>()});
    }
    doc.incomplete = j.contains("incomplete") && j.at("incomplete").get<bool>();
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Malformed, e.what());
  }
}

}  // namespace edgeprov::prov
