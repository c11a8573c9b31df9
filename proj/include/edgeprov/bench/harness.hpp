#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgeprov/bench/workload.hpp"
#include "edgeprov/prov/graph.hpp"
#include "edgeprov/transport/link.hpp"
#include "edgeprov/transport/qos2.hpp"

namespace edgeprov::bench {

/// Named link shapes: "unlimited", "1gbit", "25kbit", "lossy" (1 Gbit/s
/// with loss, duplication and reordering). InvalidArgument otherwise.
transport::LinkConfig link_preset(const std::string& name, std::uint64_t seed = 1);
std::vector<std::string> link_preset_names();

enum class TransportKind { PubSub, Baseline };

struct HarnessOptions {
  TransportKind transport = TransportKind::PubSub;
  transport::RetryPolicy retry;
  /// Replaces the link of cfg.bandwidth when set.
  std::optional<transport::LinkConfig> link;
  /// Compare translator graphs against the oracle built from the script.
  bool check_graph = true;
  Micros flush_timeout = std::chrono::seconds(600);
};

struct ClientReport {
  std::string client_id;
  std::string workflow_id;
  double t_base_ms = 0;
  double t_capture_ms = 0;
  double overhead_pct = 0;
  std::uint64_t envelopes = 0;
  std::uint64_t records = 0;
  std::uint64_t bytes_on_wire = 0;
  std::uint64_t retransmissions = 0;
  double blocked_ms = 0;
  double host_cpu_ms = 0;
};

struct RunReport {
  std::string mode;  // "virtual" or "real", suffixed "-baseline" for the comparison transport
  double t_base_ms = 0;     // mean over clients
  double t_capture_ms = 0;  // mean over clients
  double overhead_pct = 0;  // of the two means above
  std::uint64_t envelopes = 0;
  std::uint64_t records = 0;
  std::uint64_t bytes_on_wire = 0;
  std::uint64_t retransmissions = 0;
  double blocked_ms = 0;
  double host_cpu_ms = 0;
  std::vector<ClientReport> clients;

  // what arrived on the other side
  std::uint64_t records_received = 0;
  std::size_t broker_topics = 0;
  bool graphs_checked = false;
  std::vector<std::string> problems;  // graph mismatches and validation findings
};

std::string mode_label(SleepMode mode, TransportKind transport);

/// Expected translator graph for one workflow, built straight from the
/// script; timestamps come from the records the client emitted.
prov::ProvGraph oracle_graph(const WorkloadScript& script, const std::vector<CaptureRecord>& emitted);

/// Runs the workload without capture and then with it, on every client
/// concurrently. VirtualClock runs are in-process and deterministic;
/// RealSleep runs use UDP sockets on localhost behind shaping proxies.
RunReport run_pair(const WorkloadConfig& cfg, const HarnessOptions& options = {});

struct CellResult {
  WorkloadConfig cfg;
  std::string mode;
  std::size_t repeats = 0;
  RunReport mean;  // means over repeats; clients and topics from the first one
  std::vector<double> overheads;
  double ci95_pct = 0;
  std::optional<std::string> error;
};

/// run_pair `repeats` times with seeds cfg.seed, cfg.seed + 1, ...
CellResult run_cell(const WorkloadConfig& cfg, std::size_t repeats, const HarnessOptions& options = {});

}  // namespace edgeprov::bench
