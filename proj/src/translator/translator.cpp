#include "edgeprov/translator/translator.hpp"

#include <algorithm>
#include <set>

#include "edgeprov/error.hpp"
#include "edgeprov/wire/envelope.hpp"

namespace edgeprov::translator {

Translator::Translator(TranslatorConfig config) : config_(std::move(config)) {}

IngestReport Translator::ingest_envelope(const std::string& topic, ByteView envelope, Micros now) {
  (void)topic;  // records name their workflow; the topic only picks the partition
  IngestReport report;
  ++stats_.envelopes;
  std::vector<CaptureRecord> records;
  try {
    records = wire::open_envelope(envelope);
  } catch (const Error&) {
    ++stats_.malformed;
    report.malformed = true;
    return report;
  }

  std::set<std::string> touched;
  for (const auto& record : records) {
    ++report.records;
    ++stats_.records;
    const auto& wf = record.workflow_id;
    if (completed_.contains(wf)) {
      if (record.kind != RecordKind::WorkflowBegin) {
        ++stats_.rejected;
        continue;
      }
      // the same workflow id started over
      completed_.erase(wf);
      std::erase(completed_order_, wf);
      std::erase(owed_, wf);
    }
    auto& state = workflows_.try_emplace(wf, config_.pending_capacity).first->second;
    state.last_seen = now;
    touched.insert(wf);
    prov::GraphBuilder::Report applied;
    try {
      applied = state.builder.apply(record);
    } catch (const Error& e) {
      ++stats_.rejected;
      report.warnings.push_back({prov::EntityKind::Workflow, wf, "record", std::nullopt, e.what()});
      continue;
    }
    report.applied += applied.applied;
    stats_.applied += applied.applied;
    stats_.violations += applied.warnings.size();
    for (auto& w : applied.warnings) report.warnings.push_back(std::move(w));
    for (const auto& r : applied.records) {
      if (r.kind == RecordKind::WorkflowEnd) state.ended = true;
    }
    if (config_.store) config_.store->append_events(wf, applied.records);
  }

  for (const auto& wf : touched) {
    auto it = workflows_.find(wf);
    if (it == workflows_.end()) continue;
    report.pending += it->second.builder.pending();
    if (it->second.ended && it->second.builder.pending() == 0) {
      finalize(wf, it->second, false);
      report.completed.push_back(wf);
    } else if (config_.flush_on == FlushOn::EveryRecord) {
      snapshot(wf, it->second);
    }
  }
  return report;
}

void Translator::snapshot(const std::string& workflow_id, const WorkflowState& state) {
  auto doc = prov::export_prov_unchecked(state.builder.graph());
  doc.incomplete = true;
  if (config_.store) config_.store->write_document(workflow_id, doc);
  if (config_.sink) {
    try {
      config_.sink->deliver(workflow_id, prov::to_json(doc));
    } catch (const Error&) {
      ++stats_.sink_failures;  // the final document will be forwarded again
    }
  }
}

void Translator::finalize(const std::string& key, WorkflowState& state, bool incomplete) {
  const std::string workflow_id = key;  // `key` may live in the map entry erased below
  CompletedWorkflow done;
  done.workflow_id = workflow_id;
  done.graph = state.builder.graph();
  done.violations = prov::validate_graph(done.graph);
  done.document = prov::export_prov_unchecked(done.graph);
  done.document.incomplete = incomplete;
  stats_.violations += done.violations.size();
  ++stats_.documents;
  if (incomplete) ++stats_.incomplete;
  if (config_.store) config_.store->write_document(workflow_id, done.document);
  forward(done);
  workflows_.erase(workflow_id);  // invalidates `state`

  completed_order_.push_back(workflow_id);
  completed_.insert_or_assign(workflow_id, std::move(done));
  while (completed_order_.size() > config_.keep_completed) {
    const auto& oldest = completed_order_.front();
    if (std::find(owed_.begin(), owed_.end(), oldest) != owed_.end()) break;
    completed_.erase(oldest);
    completed_order_.pop_front();
  }
}

void Translator::forward(CompletedWorkflow& done) {
  if (!config_.sink) {
    done.forwarded = true;
    return;
  }
  try {
    config_.sink->deliver(done.workflow_id, prov::to_json(done.document));
    done.forwarded = true;
  } catch (const Error& e) {
    if (e.code() != Errc::SinkUnavailable) throw;
    ++stats_.sink_failures;
    owed_.push_back(done.workflow_id);
  }
}

std::size_t Translator::retry_sink() {
  std::vector<std::string> still;
  for (const auto& wf : owed_) {
    auto it = completed_.find(wf);
    if (it == completed_.end()) continue;
    try {
      config_.sink->deliver(wf, prov::to_json(it->second.document));
      it->second.forwarded = true;
    } catch (const Error& e) {
      if (e.code() != Errc::SinkUnavailable) throw;
      ++stats_.sink_failures;
      still.push_back(wf);
    }
  }
  owed_ = std::move(still);
  return owed_.size();
}

std::vector<std::string> Translator::expire(Micros now) {
  std::vector<std::string> out;
  if (config_.ttl <= Micros{0}) return out;
  for (auto it = workflows_.begin(); it != workflows_.end();) {
    auto next = std::next(it);
    if (now - it->second.last_seen > config_.ttl) {
      out.push_back(it->first);
      finalize(it->first, it->second, true);
    }
    it = next;
  }
  return out;
}

std::vector<std::string> Translator::flush_all() {
  std::vector<std::string> out;
  while (!workflows_.empty()) {
    auto it = workflows_.begin();
    out.push_back(it->first);
    const bool complete = it->second.ended && it->second.builder.pending() == 0;
    finalize(it->first, it->second, !complete);
  }
  return out;
}

const prov::ProvGraph* Translator::graph(const std::string& workflow_id) const {
  if (auto it = workflows_.find(workflow_id); it != workflows_.end()) return &it->second.builder.graph();
  if (auto it = completed_.find(workflow_id); it != completed_.end()) return &it->second.graph;
  return nullptr;
}

std::size_t Translator::pending(const std::string& workflow_id) const {
  auto it = workflows_.find(workflow_id);
  return it == workflows_.end() ? 0 : it->second.builder.pending();
}

std::vector<std::string> Translator::active_workflows() const {
  std::vector<std::string> out;
  for (const auto& [id, s] : workflows_) out.push_back(id);
  return out;
}

}  // namespace edgeprov::translator
