#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "edgeprov/bench/baseline.hpp"
#include "edgeprov/bench/harness.hpp"
#include "edgeprov/bench/stats.hpp"
#include "edgeprov/bench/sweep.hpp"
#include "edgeprov/bench/workload.hpp"
#include "edgeprov/error.hpp"
#include "edgeprov/wire/envelope.hpp"

using namespace edgeprov;
using namespace edgeprov::bench;
using namespace std::chrono_literals;

namespace {

class ManualRuntime final : public capture::Runtime {
 public:
  const Clock& clock() const override { return clock_; }
  void sleep_for(Micros d) override { clock_.advance_to(clock_.now() + d); }

 private:
  VirtualClock clock_;
};

WorkloadConfig cfg_of(std::size_t tasks, std::size_t attrs, double d, std::size_t group = 0) {
  WorkloadConfig c;
  c.tasks = tasks;
  c.attrs = attrs;
  c.task_duration_s = d;
  c.group_size = group;
  return c;
}

std::size_t columns(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

}  // namespace

TEST(Workload, StagesOfTwenty) {
  WorkloadConfig c{5, 100, 10, 0.5};
  const auto s = gen_workload(c);
  EXPECT_EQ(s.stage_sizes, (std::vector<std::size_t>{20, 20, 20, 20, 20}));
  ASSERT_EQ(s.tasks.size(), 100u);
  for (const auto& t : s.tasks) {
    EXPECT_EQ(t.duration, 500ms);
    ASSERT_EQ(t.outputs.size(), 1u);
    EXPECT_EQ(t.outputs[0].attributes.size(), 10u);
  }
  c.tasks = 103;
  EXPECT_EQ(gen_workload(c).stage_sizes, (std::vector<std::size_t>{20, 20, 20, 20, 23}));
}

TEST(Workload, StagesChainThroughOutputs) {
  WorkloadConfig c{3, 10, 2, 1.0};  // stages 3, 3, 4
  const auto s = gen_workload(c);
  std::map<std::string, const TaskSpec*> by_id;
  for (const auto& t : s.tasks) by_id[t.id] = &t;
  std::vector<std::vector<const TaskSpec*>> stages(3);
  for (const auto& t : s.tasks) stages.at(t.stage).push_back(&t);
  for (const auto* t : stages[0]) EXPECT_TRUE(t->dependencies.empty());
  for (std::size_t st = 1; st < 3; ++st) {
    const auto& prev = stages[st - 1];
    for (std::size_t j = 0; j < stages[st].size(); ++j) {
      const auto* t = stages[st][j];
      const auto* parent = prev[std::min(j, prev.size() - 1)];
      ASSERT_EQ(t->dependencies, std::vector<std::string>{parent->id});
      const auto& consumed = parent->outputs[0].id;
      EXPECT_TRUE(std::any_of(t->inputs.begin(), t->inputs.end(), [&](auto& d) { return d.id == consumed; }));
    }
  }
}

TEST(Workload, DeterministicAndGolden) {
  WorkloadConfig c{5, 10, 5, 0.5};
  c.seed = 42;
  const auto a = script_to_json(gen_workload(c));
  EXPECT_EQ(a, script_to_json(gen_workload(c)));
  auto other = c;
  other.seed = 43;
  EXPECT_NE(a, script_to_json(gen_workload(other)));

  std::ifstream in(std::string(EDGEPROV_GOLDEN_DIR) + "/workload_seed42.json");
  ASSERT_TRUE(in) << "missing golden file";
  std::stringstream golden;
  golden << in.rdbuf();
  EXPECT_EQ(a + "\n", golden.str());
}

TEST(Workload, Validation) {
  for (auto bad : {WorkloadConfig{0, 10}, WorkloadConfig{5, 0}, WorkloadConfig{20, 10}, WorkloadConfig{5, 10, 0},
                   WorkloadConfig{5, 10, 1, 0.0}, WorkloadConfig{5, 10, 1, 1.0, 0, "1gbit", 0}}) {
    EXPECT_THROW(bad.validate(), Error);
  }
  EXPECT_NO_THROW(WorkloadConfig{}.validate());
}

TEST(Stats, Formulas) {
  EXPECT_DOUBLE_EQ(overhead_pct(100.0, 101.54), 1.5400000000000063);
  EXPECT_NEAR(overhead_pct(1000, 1015.4), 1.54, 1e-12);
  EXPECT_THROW(overhead_pct(0, 1), Error);
  const std::vector<double> xs{1, 2, 3};
  EXPECT_DOUBLE_EQ(mean(xs), 2.0);
  EXPECT_DOUBLE_EQ(stddev(xs), 1.0);
  // t(0.975, 2) = 4.302652729...
  EXPECT_NEAR(ci95_half_width(xs), 4.302652729749464 / std::sqrt(3.0), 1e-9);
  const std::vector<double> one{5};
  EXPECT_EQ(ci95_half_width(one), 0.0);
  EXPECT_EQ(stddev(one), 0.0);
}

TEST(LinkPresets, Shapes) {
  EXPECT_FALSE(link_preset("unlimited").bandwidth_bps);
  EXPECT_EQ(*link_preset("25kbit").bandwidth_bps, 25'000u);
  EXPECT_EQ(*link_preset("1gbit").bandwidth_bps, 1'000'000'000u);
  EXPECT_GT(link_preset("lossy").loss_prob, 0.0);
  EXPECT_EQ(link_preset("lossy", 9).seed, 9u);
  EXPECT_THROW(link_preset("56k"), Error);
  EXPECT_EQ(link_preset_names().size(), 4u);
}

TEST(RunPair, VirtualBaseIsTheSumOfSleeps) {
  const auto r = run_pair(cfg_of(100, 10, 1.0));
  EXPECT_EQ(r.mode, "virtual");
  EXPECT_DOUBLE_EQ(r.t_base_ms, 100'000.0);
  EXPECT_GT(r.t_capture_ms, r.t_base_ms);
  EXPECT_EQ(r.envelopes, 202u);
  EXPECT_EQ(r.records, 202u);
  EXPECT_EQ(r.records_received, 202u);
  EXPECT_TRUE(r.graphs_checked);
  EXPECT_TRUE(r.problems.empty());
}

TEST(RunPair, GroupingCountsEnvelopes) {
  const auto r = run_pair(cfg_of(100, 10, 0.5, 50));
  EXPECT_EQ(r.envelopes, 104u);
  EXPECT_EQ(r.records_received, 202u);
  EXPECT_TRUE(r.problems.empty());
}

TEST(RunPair, MoreAttributesMoreBytesSimilarOverhead) {
  const auto small = run_pair(cfg_of(100, 10, 1.0));
  const auto wide = run_pair(cfg_of(100, 100, 1.0));
  EXPECT_GT(wide.bytes_on_wire, small.bytes_on_wire);
  EXPECT_LT(std::abs(wide.overhead_pct - small.overhead_pct), 1.0);
}

TEST(RunPair, Reproducible) {
  auto c = cfg_of(30, 20, 0.5, 10);
  c.clients = 3;
  HarnessOptions o;
  o.link = link_preset("lossy", 5);
  const auto a = run_pair(c, o), b = run_pair(c, o);
  EXPECT_EQ(a.t_capture_ms, b.t_capture_ms);
  EXPECT_EQ(a.bytes_on_wire, b.bytes_on_wire);
  EXPECT_EQ(a.retransmissions, b.retransmissions);
  EXPECT_EQ(a.clients.size(), 3u);
  EXPECT_EQ(a.broker_topics, 3u);
  EXPECT_TRUE(a.problems.empty());
}

TEST(RunPair, BaselineTransport) {
  HarnessOptions o;
  o.transport = TransportKind::Baseline;
  auto c = cfg_of(20, 10, 0.5, 50);
  c.bandwidth = "25kbit";
  const auto r = run_pair(c, o);
  EXPECT_EQ(r.mode, "virtual-baseline");
  EXPECT_EQ(r.envelopes, 42u);  // grouping and compression are off for the baseline
  EXPECT_EQ(r.records_received, 42u);
  EXPECT_TRUE(r.problems.empty());
}

TEST(Baseline, OneRecordOneRoundTrip) {
  ManualRuntime rt;
  VirtualBaselineChannel ch(rt, link_preset("unlimited"), link_preset("unlimited"));
  EXPECT_THROW(ch.send(Bytes{1}), Error);
  ch.open({});
  EXPECT_EQ(ch.round_trips(), 1u);
  ch.send(wire::seal_envelope(std::vector{CaptureRecord::workflow_begin("w", 0)}, false));
  EXPECT_EQ(ch.round_trips(), 2u);
}

TEST(Baseline, BandwidthBound) {
  ManualRuntime rt;
  VirtualBaselineChannel ch(rt, link_preset("25kbit"), link_preset("25kbit"));
  ch.open({});
  const auto start = rt.now();
  std::uint64_t bits = 0;
  const auto script = gen_workload(cfg_of(100, 10, 0.5));
  for (const auto& t : script.tasks) {
    auto env = wire::seal_envelope(std::vector{CaptureRecord::task_end("wf", t.id, t.outputs, 0)}, false);
    bits += 8 * (env.size() + kRequestHeaderBytes + kAckBytes);
    ch.send(std::move(env));
  }
  const double elapsed_s = static_cast<double>((rt.now() - start).count()) / 1e6;
  EXPECT_GE(elapsed_s, static_cast<double>(bits) / 25'000.0);
  EXPECT_EQ(ch.round_trips(), 101u);
}

TEST(Baseline, MoreBytesThanGroupedCompressedPubSub) {
  HarnessOptions base;
  base.transport = TransportKind::Baseline;
  auto c = cfg_of(100, 100, 0.5, 50);
  const auto pubsub = run_pair(c);
  const auto baseline = run_pair(c, base);
  EXPECT_LT(pubsub.bytes_on_wire, baseline.bytes_on_wire);
}

TEST(Baseline, TcpServerRoundTrip) {
  BaselineServer server;
  TcpBaselineChannel ch(server.address());
  ch.open({});
  ch.send(wire::seal_envelope(std::vector{CaptureRecord::workflow_begin("w", 0),
                                          CaptureRecord::workflow_end("w", 1)},
                              true));
  EXPECT_THROW(ch.send(Bytes{0xFF, 0, 1}), Error);  // malformed envelope is rejected
  ch.close();
  server.stop();
  EXPECT_EQ(server.records(), 2u);
  EXPECT_GE(server.requests(), 1u);

  TcpBaselineChannel dead("127.0.0.1:1");
  try {
    dead.open({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConnectFailed);
  }
}

TEST(Sweep, GridSizes) {
  EXPECT_EQ(preset_grid("table1", {}).size(), 8u);
  EXPECT_EQ(preset_grid("table8", {}).size(), 16u);
  EXPECT_EQ(preset_grid("table9", {}).size(), 4u);
  EXPECT_THROW(preset_grid("table2", {}), Error);
  for (const auto& c : preset_grid("table9", {})) {
    EXPECT_EQ(c.tasks, 100u);
    EXPECT_EQ(c.attrs, 100u);
    EXPECT_EQ(c.task_duration_s, 0.5);
  }
}

TEST(Sweep, CsvShape) {
  auto cells = sweep({cfg_of(10, 2, 0.5), cfg_of(10, 2, 0.5, 2)}, 2);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].overheads.size(), 2u) << cells[0].error.value_or("");
  CellResult failed;
  failed.cfg = cfg_of(10, 2, 0.5);
  failed.mode = "virtual";
  failed.error = "boom";
  cells.push_back(failed);
  std::stringstream out;
  write_csv(out, cells);
  std::vector<std::string> lines;
  for (std::string line; std::getline(out, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], csv_header());
  for (const auto& l : lines) EXPECT_EQ(columns(l), 15u) << l;
  EXPECT_TRUE(lines[1].starts_with("virtual,2,0.5,0,1gbit,1,2,"));
  EXPECT_TRUE(lines[3].ends_with(",,,,,,,,"));
  const auto grid = summary_grid(cells);
  EXPECT_NE(grid.find("failed"), std::string::npos);
  EXPECT_NE(grid.find("1gbit d=0.5s A=2"), std::string::npos);
}
