#include "edgeprov/translator/query.hpp"

#include <algorithm>

#include "edgeprov/error.hpp"

namespace edgeprov::translator {

namespace {

std::optional<double> numeric(const Scalar& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

}  // namespace

const Scalar* Row::get(std::string_view column) const {
  for (const auto& [k, v] : columns) {
    if (k == column) return &v;
  }
  return nullptr;
}

std::vector<Row> query(const prov::ProvDocument& doc, const Selector& selector) {
  std::vector<Row> rows;
  if (selector.target == Target::Data) {
    for (const auto& e : doc.entities) {
      Row r{e.id, {}};
      for (const auto& a : e.attributes) r.columns.emplace_back(a.key, a.value);
      rows.push_back(std::move(r));
    }
  } else {
    for (const auto& a : doc.activities) {
      Row r{a.id, {}};
      if (a.start_time) r.columns.emplace_back("start_time", *a.start_time);
      if (a.end_time) r.columns.emplace_back("end_time", *a.end_time);
      if (a.start_time && a.end_time) r.columns.emplace_back("elapsed_ms", *a.end_time - *a.start_time);
      r.columns.emplace_back("status",
                             std::string(a.status == prov::TaskStatus::Finished ? "finished" : "running"));
      rows.push_back(std::move(r));
    }
  }

  if (selector.key) {
    std::erase_if(rows, [&](const Row& r) { return r.get(*selector.key) == nullptr; });
  }
  if (selector.order_by) {
    const auto& col = *selector.order_by;
    std::erase_if(rows, [&](const Row& r) {
      const auto* v = r.get(col);
      return !v || !numeric(*v);
    });
    std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
      const double x = *numeric(*a.get(col));
      const double y = *numeric(*b.get(col));
      if (x != y) return selector.descending ? x > y : x < y;
      return a.id < b.id;
    });
  } else {
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.id < b.id; });
  }
  if (selector.limit && rows.size() > *selector.limit) rows.resize(*selector.limit);
  return rows;
}

std::vector<Row> query_graph(const FileStore& store, const std::string& workflow_id, const Selector& selector) {
  auto doc = workflow_id.empty() ? std::nullopt : store.load_document(workflow_id);
  if (!doc) throw Error(Errc::UnknownWorkflow, "no persisted workflow '" + workflow_id + "'");
  return query(*doc, selector);
}

}  // namespace edgeprov::translator
