#include "edgeprov/json.hpp"

#include "edgeprov/error.hpp"

namespace edgeprov {

Json scalar_to_json(const Scalar& value) {
  return std::visit([](const auto& v) { return Json(v); }, value);
}

Scalar scalar_from_json(const Json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>();
  if (value.is_number_integer()) return value.get<std::int64_t>();
  if (value.is_number_float()) return value.get<double>();
  throw Error(Errc::Malformed, "attribute value must be a scalar");
}

Json attributes_to_json(const std::vector<Attribute>& attributes) {
  Json obj = Json::object();
  for (const auto& a : attributes) obj[a.key] = scalar_to_json(a.value);
  return obj;
}

std::vector<Attribute> attributes_from_json(const Json& object) {
  if (!object.is_object()) throw Error(Errc::Malformed, "attributes must be an object");
  std::vector<Attribute> out;
  out.reserve(object.size());
  for (const auto& [key, value] : object.items()) out.push_back({key, scalar_from_json(value)});
  return out;
}

namespace {

Json string_list(const std::vector<std::string>& items) {
  Json arr = Json::array();
  for (const auto& s : items) arr.push_back(s);
  return arr;
}

std::vector<std::string> string_list_from(const Json& arr) {
  if (!arr.is_array()) throw Error(Errc::Malformed, "expected array of strings");
  std::vector<std::string> out;
  for (const auto& v : arr) {
    if (!v.is_string()) throw Error(Errc::Malformed, "expected string");
    out.push_back(v.get<std::string>());
  }
  return out;
}

RecordKind kind_from(std::string_view name) {
  for (auto k : {RecordKind::WorkflowBegin, RecordKind::WorkflowEnd, RecordKind::TaskBegin, RecordKind::TaskEnd}) {
    if (to_string(k) == name) return k;
  }
  throw Error(Errc::Malformed, "unknown record kind");
}

}  // namespace

Json record_to_json(const CaptureRecord& r) {
  Json j = Json::object();
  j["kind"] = std::string(to_string(r.kind));
  j["workflow"] = r.workflow_id;
  j["task"] = r.task_id;
  j["dependencies"] = string_list(r.dependencies);
  Json data = Json::array();
  for (const auto& d : r.data) {
    Json item = Json::object();
    item["id"] = d.id;
    item["derivations"] = string_list(d.derivations);
    // Array of pairs keeps duplicate keys, which an object would fold.
    Json attrs = Json::array();
    for (const auto& a : d.attributes) attrs.push_back(Json::array({a.key, scalar_to_json(a.value)}));
    item["attributes"] = std::move(attrs);
    data.push_back(std::move(item));
  }
  j["data"] = std::move(data);
  j["timestamp"] = r.timestamp;
  return j;
}

CaptureRecord record_from_json(const Json& j) {
  try {
    CaptureRecord r;
    r.kind = kind_from(j.at("kind").get<std::string>());
    r.workflow_id = j.at("workflow").get<std::string>();
    r.task_id = j.at("task").get<std::string>();
    r.dependencies = string_list_from(j.at("dependencies"));
    for (const auto& item : j.at("data")) {
      DataPayload d;
      d.id = item.at("id").get<std::string>();
      d.derivations = string_list_from(item.at("derivations"));
      for (const auto& pair : item.at("attributes")) {
        if (!pair.is_array() || pair.size() != 2) throw Error(Errc::Malformed, "attribute must be [key, value]");
        d.attributes.push_back({pair[0].get<std::string>(), scalar_from_json(pair[1])});
      }
      r.data.push_back(std::move(d));
    }
    r.timestamp = j.at("timestamp").get<std::int64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Malformed, e.what());
  }
}

}  // namespace edgeprov
