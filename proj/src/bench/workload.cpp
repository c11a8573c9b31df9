#include "edgeprov/bench/workload.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "edgeprov/error.hpp"
#include "edgeprov/json.hpp"

namespace edgeprov::bench {

void WorkloadConfig::validate() const {
  if (transformations == 0 || tasks == 0 || attrs == 0 || clients == 0) {
    throw Error(Errc::InvalidArgument, "transformations, tasks, attrs and clients must be at least 1");
  }
  if (transformations > tasks) throw Error(Errc::InvalidArgument, "more transformations than tasks");
  if (!(task_duration_s > 0) || !std::isfinite(task_duration_s)) {
    throw Error(Errc::InvalidArgument, "task duration must be positive");
  }
}

namespace {

class Values {
 public:
  explicit Values(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::uint64_t below(std::uint64_t n) { return rng_() % n; }

  Scalar fresh(std::size_t k) {
    switch (k % 4) {
      case 0: return static_cast<std::int64_t>(below(10000));
      case 1: return round3(uniform() * 100.0);
      case 2: return "v" + std::to_string(below(16));
      default: return below(2) == 1;
    }
  }

  Scalar drift(const Scalar& v) {
    if (auto* i = std::get_if<std::int64_t>(&v)) return *i + static_cast<std::int64_t>(below(100));
    if (auto* d = std::get_if<double>(&v)) return round3(*d + uniform() - 0.5);
    if (std::holds_alternative<std::string>(v)) return "v" + std::to_string(below(16));
    return !std::get<bool>(v);
  }

 private:
  static double round3(double x) { return std::round(x * 1000.0) / 1000.0; }
  std::mt19937_64 rng_;
};

std::string key(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "attr_%03zu", k);
  return buf;
}

}  // namespace

WorkloadScript gen_workload(const WorkloadConfig& config, const std::string& workflow_id) {
  config.validate();
  WorkloadScript script;
  script.workflow_id = workflow_id;
  const auto per_stage = config.tasks / config.transformations;
  for (std::size_t s = 0; s < config.transformations; ++s) script.stage_sizes.push_back(per_stage);
  script.stage_sizes.back() += config.tasks % config.transformations;

  Values values(config.seed);
  std::vector<Scalar> current;
  for (std::size_t k = 0; k < config.attrs; ++k) current.push_back(values.fresh(k));
  auto step = [&] {
    // about one attribute in ten moves between successive snapshots
    for (auto& v : current) {
      if (values.uniform() < 0.1) v = values.drift(v);
    }
    std::vector<Attribute> out;
    for (std::size_t k = 0; k < current.size(); ++k) out.push_back({key(k), current[k]});
    return out;
  };

  const auto duration = from_seconds(config.task_duration_s);
  std::size_t index = 0;
  std::size_t prev_begin = 0;
  for (std::size_t s = 0; s < script.stage_sizes.size(); ++s) {
    const auto begin = script.tasks.size();
    for (std::size_t j = 0; j < script.stage_sizes[s]; ++j, ++index) {
      char id[32];
      std::snprintf(id, sizeof id, "task_%03zu", index);
      TaskSpec t;
      t.id = id;
      t.stage = s;
      t.duration = duration;
      if (s == 0) {
        t.inputs.push_back({t.id + "_in", {}, step()});
      } else {
        const auto& pred = script.tasks[prev_begin + std::min(j, script.stage_sizes[s - 1] - 1)];
        t.dependencies.push_back(pred.id);
        t.inputs.push_back(pred.outputs.front());
      }
      t.outputs.push_back({t.id + "_out", {t.inputs.front().id}, step()});
      script.tasks.push_back(std::move(t));
    }
    prev_begin = begin;
  }
  return script;
}

std::string script_to_json(const WorkloadScript& script) {
  Json j;
  j["workflow"] = script.workflow_id;
  j["stages"] = script.stage_sizes;
  auto data = [](const std::vector<DataPayload>& list) {
    Json arr = Json::array();
    for (const auto& d : list) {
      arr.push_back({{"id", d.id}, {"derivations", d.derivations}, {"attributes", attributes_to_json(d.attributes)}});
    }
    return arr;
  };
  Json tasks = Json::array();
  for (const auto& t : script.tasks) {
    tasks.push_back({{"id", t.id},
                     {"stage", t.stage},
                     {"dependencies", t.dependencies},
                     {"inputs", data(t.inputs)},
                     {"outputs", data(t.outputs)},
                     {"duration_us", t.duration.count()}});
  }
  j["tasks"] = std::move(tasks);
  return j.dump(1);
}

}  // namespace edgeprov::bench
