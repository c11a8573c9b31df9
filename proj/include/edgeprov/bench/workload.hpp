#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgeprov/clock.hpp"
#include "edgeprov/model.hpp"

namespace edgeprov::bench {

enum class SleepMode { RealSleep, VirtualClock };

struct WorkloadConfig {
  std::size_t transformations = 5;
  std::size_t tasks = 100;
  std::size_t attrs = 10;
  double task_duration_s = 0.5;
  std::size_t group_size = 0;
  std::string bandwidth = "1gbit";  // link preset name
  std::size_t clients = 1;
  std::uint64_t seed = 1;
  SleepMode sleep_mode = SleepMode::VirtualClock;
  bool compress = true;

  /// InvalidArgument unless transformations, tasks, attrs and clients are >= 1,
  /// transformations <= tasks and the duration is positive.
  void validate() const;
};

struct TaskSpec {
  std::string id;
  std::size_t stage = 0;
  std::vector<std::string> dependencies;
  std::vector<DataPayload> inputs;
  std::vector<DataPayload> outputs;
  Micros duration{0};
};

struct WorkloadScript {
  std::string workflow_id;
  std::vector<std::size_t> stage_sizes;
  std::vector<TaskSpec> tasks;
};

/// T tasks over `transformations` chained stages of T / transformations
/// tasks (the remainder goes to the last stage). Task j of a later stage
/// depends on task min(j, n - 1) of the previous stage (n = its size) and
/// consumes that task's output. Attribute values drift slowly from a seeded
/// per-workflow baseline, the way metrics of successive epochs do.
WorkloadScript gen_workload(const WorkloadConfig& config, const std::string& workflow_id = "wf");

/// Canonical JSON text of a script, for determinism checks and golden files.
std::string script_to_json(const WorkloadScript& script);

}  // namespace edgeprov::bench
