#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edgeprov/model.hpp"
#include "edgeprov/prov/document.hpp"
#include "edgeprov/translator/store.hpp"

namespace edgeprov::translator {

enum class Target { Data, Tasks };

/// Data rows carry the entity's attributes. Task rows carry start_time,
/// end_time, elapsed_ms (when both times are known) and status.
struct Selector {
  Target target = Target::Data;
  std::optional<std::string> key;       // keep rows that have this column
  std::optional<std::string> order_by;  // numeric column; rows without it are dropped
  bool descending = true;
  std::optional<std::size_t> limit;
};

struct Row {
  std::string id;
  std::vector<std::pair<std::string, Scalar>> columns;

  const Scalar* get(std::string_view column) const;
  bool operator==(const Row&) const = default;
};

/// Ties on the ordering column, and unordered output, sort by id.
std::vector<Row> query(const prov::ProvDocument& doc, const Selector& selector);

/// Runs `selector` over the persisted document. UnknownWorkflow when the
/// store has none.
std::vector<Row> query_graph(const FileStore& store, const std::string& workflow_id, const Selector& selector);

}  // namespace edgeprov::translator
