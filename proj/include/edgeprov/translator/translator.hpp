#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edgeprov/bytes.hpp"
#include "edgeprov/clock.hpp"
#include "edgeprov/prov/document.hpp"
#include "edgeprov/prov/graph.hpp"
#include "edgeprov/translator/sink.hpp"
#include "edgeprov/translator/store.hpp"

namespace edgeprov::translator {

enum class FlushOn { WorkflowEnd, EveryRecord };

struct TranslatorConfig {
  std::shared_ptr<FileStore> store;  // local persistence; optional
  std::shared_ptr<Sink> sink;        // backend; optional
  FlushOn flush_on = FlushOn::WorkflowEnd;
  Micros ttl{0};  // idle workflows are persisted as incomplete after this; 0 = never
  std::size_t pending_capacity = prov::GraphBuilder::kDefaultPendingCapacity;
  std::size_t keep_completed = 1024;  // finished workflows kept in memory for inspection
};

struct TranslatorStats {
  std::uint64_t envelopes = 0;
  std::uint64_t records = 0;
  std::uint64_t applied = 0;
  std::uint64_t malformed = 0;
  std::uint64_t violations = 0;  // validation findings and apply warnings
  std::uint64_t rejected = 0;    // records dropped (pending set full, bad shape)
  std::uint64_t documents = 0;
  std::uint64_t incomplete = 0;
  std::uint64_t sink_failures = 0;
};

struct IngestReport {
  std::size_t records = 0;
  std::size_t applied = 0;
  std::size_t pending = 0;  // parked records across touched workflows after this envelope
  bool malformed = false;
  std::vector<std::string> completed;  // workflows finalized by this envelope
  std::vector<prov::Violation> warnings;
};

struct CompletedWorkflow {
  std::string workflow_id;
  prov::ProvGraph graph;
  prov::ProvDocument document;
  std::vector<prov::Violation> violations;
  bool forwarded = false;
};

/// Rebuilds provenance graphs from envelopes. Single-threaded; one instance
/// per topic partition.
class Translator {
 public:
  explicit Translator(TranslatorConfig config = {});

  IngestReport ingest_envelope(const std::string& topic, ByteView envelope, Micros now = Micros{0});

  /// Persists workflows idle for longer than the TTL, flagged incomplete.
  std::vector<std::string> expire(Micros now);
  /// Persists every unfinished workflow, flagged incomplete.
  std::vector<std::string> flush_all();
  /// Retries sink deliveries that failed earlier. Returns how many are still owed.
  std::size_t retry_sink();

  const prov::ProvGraph* graph(const std::string& workflow_id) const;
  std::size_t pending(const std::string& workflow_id) const;
  const std::map<std::string, CompletedWorkflow>& completed() const noexcept { return completed_; }
  std::vector<std::string> active_workflows() const;
  const TranslatorStats& stats() const noexcept { return stats_; }

 private:
  struct WorkflowState {
    explicit WorkflowState(std::size_t capacity) : builder(capacity) {}
    prov::GraphBuilder builder;
    bool ended = false;
    Micros last_seen{0};
  };

  void finalize(const std::string& workflow_id, WorkflowState& state, bool incomplete);
  void forward(CompletedWorkflow& done);
  void snapshot(const std::string& workflow_id, const WorkflowState& state);

  TranslatorConfig config_;
  std::map<std::string, WorkflowState> workflows_;
  std::map<std::string, CompletedWorkflow> completed_;
  std::deque<std::string> completed_order_;
  std::vector<std::string> owed_;  // completed workflows the sink has not taken yet
  TranslatorStats stats_;
};

}  // namespace edgeprov::translator
