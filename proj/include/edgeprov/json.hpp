#pragma once

#include <json.hpp>

#include "edgeprov/model.hpp"

namespace edgeprov {

using Json = nlohmann::ordered_json;

Json scalar_to_json(const Scalar& value);
/// Integers map to int64, other numbers to double. Malformed for null/objects/arrays.
Scalar scalar_from_json(const Json& value);

Json attributes_to_json(const std::vector<Attribute>& attributes);
std::vector<Attribute> attributes_from_json(const Json& object);

/// One event-log line: {"kind","workflow","task","dependencies","data","timestamp"}.
Json record_to_json(const CaptureRecord& record);
CaptureRecord record_from_json(const Json& json);

}  // namespace edgeprov
