#include "edgeprov/bench/harness.hpp"

#include <atomic>
#include <memory>
#include <thread>

#include "edgeprov/bench/baseline.hpp"
#include "edgeprov/bench/stats.hpp"
#include "edgeprov/capture/capture.hpp"
#include "edgeprov/capture/io.hpp"
#include "edgeprov/error.hpp"
#include "edgeprov/transport/sim.hpp"
#include "edgeprov/transport/udp.hpp"
#include "edgeprov/translator/service.hpp"
#include "edgeprov/translator/translator.hpp"

namespace edgeprov::bench {

using namespace std::chrono_literals;

transport::LinkConfig link_preset(const std::string& name, std::uint64_t seed) {
  transport::LinkConfig c;
  c.seed = seed;
  if (name == "unlimited") return c;
  if (name == "1gbit" || name == "lossy") {
    c.bandwidth_bps = 1'000'000'000;
    c.base_delay = 1ms;
    if (name == "lossy") {
      c.loss_prob = 0.1;
      c.dup_prob = 0.05;
      c.reorder_prob = 0.05;
    }
    return c;
  }
  if (name == "25kbit") {
    c.bandwidth_bps = 25'000;
    c.base_delay = 100ms;
    return c;
  }
  throw Error(Errc::InvalidArgument, "unknown bandwidth preset '" + name + "'");
}

std::vector<std::string> link_preset_names() { return {"unlimited", "1gbit", "25kbit", "lossy"}; }

std::string mode_label(SleepMode mode, TransportKind transport) {
  std::string label = mode == SleepMode::VirtualClock ? "virtual" : "real";
  if (transport == TransportKind::Baseline) label += "-baseline";
  return label;
}

prov::ProvGraph oracle_graph(const WorkloadScript& script, const std::vector<CaptureRecord>& emitted) {
  auto stamp = [&](RecordKind kind, const std::string& task) -> std::optional<std::int64_t> {
    for (const auto& r : emitted) {
      if (r.kind == kind && r.task_id == task) return r.timestamp;
    }
    return std::nullopt;
  };
  auto ids = [](const std::vector<DataPayload>& list) {
    std::vector<std::string> out;
    for (const auto& d : list) out.push_back(d.id);
    return out;
  };

  prov::ProvGraph g;
  const auto& wf = script.workflow_id;
  g.workflows[wf] = {wf, stamp(RecordKind::WorkflowBegin, ""), stamp(RecordKind::WorkflowEnd, "")};
  for (const auto& t : script.tasks) {
    const auto begun = stamp(RecordKind::TaskBegin, t.id);
    if (!begun) continue;
    const auto ended = stamp(RecordKind::TaskEnd, t.id);
    prov::TaskRecord task{t.id, wf, t.dependencies, ids(t.inputs), {}, begun, ended, prov::TaskStatus::Running};
    auto add = [&](const DataPayload& d) { g.data.try_emplace(d.id, prov::DataRecord{d.id, wf, d.derivations, d.attributes}); };
    for (const auto& d : t.inputs) add(d);
    if (ended) {
      task.outputs = ids(t.outputs);
      task.status = prov::TaskStatus::Finished;
      for (const auto& d : t.outputs) add(d);
    }
    g.tasks[t.id] = std::move(task);
  }
  return g;
}

namespace {

std::string first_difference(const prov::ProvGraph& got, const prov::ProvGraph& want) {
  auto compare = [](const auto& a, const auto& b, const char* what) -> std::string {
    for (const auto& [id, v] : b) {
      auto it = a.find(id);
      if (it == a.end()) return std::string(what) + " " + id + " missing";
      if (!(it->second == v)) return std::string(what) + " " + id + " differs";
    }
    for (const auto& [id, v] : a) {
      if (!b.contains(id)) return std::string(what) + " " + id + " unexpected";
    }
    return {};
  };
  for (auto s : {compare(got.workflows, want.workflows, "workflow"), compare(got.tasks, want.tasks, "task"),
                 compare(got.data, want.data, "data")}) {
    if (!s.empty()) return s;
  }
  return "graphs differ";
}

struct Plan {
  WorkloadConfig cfg;
  HarnessOptions options;
  std::vector<WorkloadScript> scripts;
  std::vector<capture::CaptureConfig> captures;
  transport::LinkConfig link;

  transport::LinkConfig up(std::size_t i) const {
    auto c = link;
    c.seed = cfg.seed * 1000 + 2 * i;
    return c;
  }
  transport::LinkConfig down(std::size_t i) const {
    auto c = link;
    c.seed = cfg.seed * 1000 + 2 * i + 1;
    return c;
  }
  // The translator sits on a fast link that misbehaves like the client links.
  transport::LinkConfig translator_link(std::uint64_t salt) const {
    auto c = link_preset("1gbit", cfg.seed * 1000 + 900 + salt);
    c.loss_prob = link.loss_prob;
    c.dup_prob = link.dup_prob;
    c.reorder_prob = link.reorder_prob;
    return c;
  }
};

Plan make_plan(const WorkloadConfig& cfg, const HarnessOptions& options) {
  cfg.validate();
  Plan p{cfg, options, {}, {}, options.link ? *options.link : link_preset(cfg.bandwidth, cfg.seed)};
  const bool baseline = options.transport == TransportKind::Baseline;
  for (std::size_t i = 0; i < cfg.clients; ++i) {
    auto wcfg = cfg;
    wcfg.seed = cfg.seed + 7919 * i;
    p.scripts.push_back(gen_workload(wcfg, "wf-" + std::to_string(i)));
    capture::CaptureConfig cc;
    cc.client_id = "c" + std::to_string(i);
    cc.group_size = baseline ? 0 : cfg.group_size;
    cc.compress = baseline ? false : cfg.compress;
    cc.retry = options.retry;
    cc.flush_timeout = options.flush_timeout;
    p.captures.push_back(std::move(cc));
  }
  return p;
}

struct ClientRun {
  ClientReport report;
  std::vector<CaptureRecord> emitted;
};

void run_uninstrumented(capture::Runtime& rt, const WorkloadScript& script, ClientReport& report) {
  const auto start = rt.now();
  for (const auto& t : script.tasks) rt.sleep_for(t.duration);
  report.t_base_ms = to_ms(rt.now() - start);
}

void run_instrumented(std::unique_ptr<capture::Channel> channel, const WorkloadScript& script,
                      const capture::CaptureConfig& cc, ClientRun& out) {
  auto& rt = channel->runtime();
  const auto start = rt.now();
  auto wf = capture::Workflow::begin(script.workflow_id, cc, std::move(channel));
  for (const auto& t : script.tasks) {
    auto task = wf->begin_task(t.id, t.dependencies, t.inputs);
    rt.sleep_for(t.duration);
    task.end(t.outputs);
  }
  std::optional<Error> failure;
  try {
    wf->end();
  } catch (const Error& e) {
    failure = e;
  }
  auto& r = out.report;
  r.t_capture_ms = to_ms(rt.now() - start);
  const auto& s = wf->stats();
  r.envelopes = s.envelopes;
  r.records = s.records;
  r.bytes_on_wire = s.bytes_on_wire;
  r.retransmissions = s.retransmissions;
  r.blocked_ms = s.blocked_ms;
  r.host_cpu_ms = s.host_cpu_ms;
  out.emitted = wf->emitted();
  if (failure) throw *failure;
}

RunReport summarize(const Plan& plan, std::vector<ClientRun>& runs) {
  RunReport rep;
  rep.mode = mode_label(plan.cfg.sleep_mode, plan.options.transport);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto& c = runs[i].report;
    c.client_id = plan.captures[i].client_id;
    c.workflow_id = plan.scripts[i].workflow_id;
    c.overhead_pct = overhead_pct(c.t_base_ms, c.t_capture_ms);
    rep.t_base_ms += c.t_base_ms;
    rep.t_capture_ms += c.t_capture_ms;
    rep.envelopes += c.envelopes;
    rep.records += c.records;
    rep.bytes_on_wire += c.bytes_on_wire;
    rep.retransmissions += c.retransmissions;
    rep.blocked_ms += c.blocked_ms;
    rep.host_cpu_ms += c.host_cpu_ms;
    rep.clients.push_back(c);
  }
  const auto n = static_cast<double>(runs.size());
  rep.t_base_ms /= n;
  rep.t_capture_ms /= n;
  rep.overhead_pct = overhead_pct(rep.t_base_ms, rep.t_capture_ms);
  return rep;
}

void check_graphs(const Plan& plan, const std::vector<ClientRun>& runs,
                  const std::function<std::optional<prov::ProvGraph>(const std::string&)>& lookup, RunReport& rep) {
  rep.graphs_checked = true;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& wf = plan.scripts[i].workflow_id;
    const auto got = lookup(wf);
    if (!got) {
      rep.problems.push_back(wf + ": no graph at the translator");
      continue;
    }
    const auto want = oracle_graph(plan.scripts[i], runs[i].emitted);
    if (!(*got == want)) rep.problems.push_back(wf + ": " + first_difference(*got, want));
    for (const auto& v : prov::validate_graph(*got)) rep.problems.push_back(wf + ": " + prov::describe(v));
  }
}

// Virtual time ------------------------------------------------------------

void virtual_base(const Plan& plan, std::vector<ClientRun>& runs) {
  transport::World world;
  capture::SimScheduler sched(world);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    sched.spawn([&, i](capture::Actor& a) { run_uninstrumented(a, plan.scripts[i], runs[i].report); });
  }
  sched.run();
}

RunReport virtual_run(const Plan& plan) {
  std::vector<ClientRun> runs(plan.scripts.size());
  virtual_base(plan, runs);

  transport::BrokerConfig bc;
  bc.retry = plan.options.retry;
  transport::World world(bc);
  translator::Translator tr;

  transport::ClientConfig tcfg;
  tcfg.client_id = "translator";
  tcfg.retry = plan.options.retry;
  const auto tn = world.add_client(tcfg, plan.translator_link(0), plan.translator_link(1));
  world.on_delivery(tn, [&](std::vector<transport::Delivery> ds) {
    for (auto& d : ds) tr.ingest_envelope(d.topic, d.payload, world.now());
  });
  auto& ts = world.client(tn);
  ts.connect(world.now());
  world.flush();
  if (!world.run_until([&] { return ts.state() == transport::SessionState::Connected; }, world.now() + 60s)) {
    throw Error(Errc::ConnectFailed, "translator could not connect");
  }
  ts.subscribe("prov/+", world.now());
  world.flush();
  if (!world.run_until([&] { return ts.subscribed("prov/+"); }, world.now() + 60s)) {
    throw Error(Errc::ConnectFailed, "translator could not subscribe");
  }

  const bool pubsub = plan.options.transport == TransportKind::PubSub;
  capture::SimScheduler sched(world);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (pubsub) {
      transport::ClientConfig cc;
      cc.client_id = plan.captures[i].client_id;
      cc.retry = plan.options.retry;
      const auto node = world.add_client(cc, plan.up(i), plan.down(i));
      sched.spawn(
          [&, i](capture::Actor& a) {
            run_instrumented(std::make_unique<capture::PubSubChannel>(a), plan.scripts[i], plan.captures[i], runs[i]);
          },
          node);
    } else {
      sched.spawn([&, i](capture::Actor& a) {
        run_instrumented(std::make_unique<VirtualBaselineChannel>(a, plan.up(i), plan.down(i)), plan.scripts[i],
                         plan.captures[i], runs[i]);
      });
    }
  }
  sched.run();

  auto rep = summarize(plan, runs);
  rep.broker_topics = world.broker().topics().size();
  if (pubsub) {
    auto all_done = [&] {
      for (const auto& s : plan.scripts) {
        if (!tr.completed().contains(s.workflow_id)) return false;
      }
      return true;
    };
    world.run_until(all_done, world.now() + 600s);
    rep.records_received = tr.stats().records;
    if (plan.options.check_graph) {
      check_graphs(plan, runs,
                   [&](const std::string& wf) -> std::optional<prov::ProvGraph> {
                     if (const auto* g = tr.graph(wf)) return *g;
                     return std::nullopt;
                   },
                   rep);
    }
  } else {
    rep.records_received = rep.records;  // the stream acknowledges each request
  }
  return rep;
}

// Real sockets and sleeps -------------------------------------------------

// Publishes through its own session, bypassing the PROVLIGHT_BROKER override.
class OwnedPubSub final : public capture::Channel {
 public:
  explicit OwnedPubSub(std::unique_ptr<capture::UdpSessionIo> io) : io_(std::move(io)), inner_(*io_) {}
  void open(const capture::CaptureConfig& c) override { inner_.open(c); }
  void send(Bytes b) override { inner_.send(std::move(b)); }
  std::size_t drain(Micros d) override { return inner_.drain(d); }
  void close() override { inner_.close(); }
  capture::ChannelStats stats() const override { return inner_.stats(); }
  capture::Runtime& runtime() override { return *io_; }

 private:
  std::unique_ptr<capture::UdpSessionIo> io_;
  capture::PubSubChannel inner_;
};

template <typename Fn>
void in_threads(std::size_t n, Fn fn) {
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(n);
  for (std::size_t i = 0; i < n; ++i) {
    threads.emplace_back([&, i] {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

RunReport real_run(const Plan& plan) {
  std::vector<ClientRun> runs(plan.scripts.size());
  in_threads(runs.size(), [&](std::size_t i) {
    capture::RealRuntime rt;
    run_uninstrumented(rt, plan.scripts[i], runs[i].report);
  });

  if (plan.options.transport == TransportKind::Baseline) {
    BaselineServer server;
    in_threads(runs.size(), [&](std::size_t i) {
      run_instrumented(std::make_unique<TcpBaselineChannel>(server.address(), plan.up(i), plan.down(i)),
                       plan.scripts[i], plan.captures[i], runs[i]);
    });
    auto rep = summarize(plan, runs);
    rep.records_received = server.records();
    return rep;
  }

  transport::BrokerConfig bc;
  bc.retry = plan.options.retry;
  transport::BrokerServer broker("127.0.0.1:0", bc);
  translator::ServiceConfig sc;
  sc.broker_addr = broker.address();
  sc.translator.keep_completed = std::max<std::size_t>(1024, plan.scripts.size());
  translator::TranslatorService service(sc);
  std::atomic<bool> stop{false};
  std::thread pump([&] { service.run(stop); });

  std::vector<std::unique_ptr<transport::LinkProxy>> proxies;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    proxies.push_back(std::make_unique<transport::LinkProxy>("127.0.0.1:0", broker.address(), plan.up(i), plan.down(i)));
  }
  std::exception_ptr failure;
  try {
    in_threads(runs.size(), [&](std::size_t i) {
      auto cc = plan.captures[i];
      cc.broker_addr = proxies[i]->address();
      transport::ClientConfig tc;
      tc.client_id = cc.client_id;
      tc.retry = cc.retry;
      auto channel = std::make_unique<OwnedPubSub>(std::make_unique<capture::UdpSessionIo>(tc, cc.broker_addr));
      run_instrumented(std::move(channel), plan.scripts[i], cc, runs[i]);
    });
  } catch (...) {
    failure = std::current_exception();
  }

  auto finished = [&] {
    std::size_t done = 0;
    service.workers().visit([&](translator::Translator& t) {
      for (const auto& s : plan.scripts) done += t.completed().contains(s.workflow_id);
    });
    return done == plan.scripts.size();
  };
  const auto deadline = std::chrono::steady_clock::now() + 60s;
  while (!failure && !finished() && std::chrono::steady_clock::now() < deadline) std::this_thread::sleep_for(20ms);
  stop = true;
  pump.join();
  if (failure) std::rethrow_exception(failure);

  auto rep = summarize(plan, runs);
  broker.inspect([&](const transport::Broker& b) { rep.broker_topics = b.topics().size(); });
  rep.records_received = service.workers().stats().records;
  if (plan.options.check_graph) {
    check_graphs(plan, runs,
                 [&](const std::string& wf) -> std::optional<prov::ProvGraph> {
                   std::optional<prov::ProvGraph> g;
                   service.workers().visit([&](translator::Translator& t) {
                     if (const auto* p = t.graph(wf)) g = *p;
                   });
                   return g;
                 },
                 rep);
  }
  service.shutdown();
  return rep;
}

}  // namespace

RunReport run_pair(const WorkloadConfig& cfg, const HarnessOptions& options) {
  const auto plan = make_plan(cfg, options);
  return cfg.sleep_mode == SleepMode::VirtualClock ? virtual_run(plan) : real_run(plan);
}

CellResult run_cell(const WorkloadConfig& cfg, std::size_t repeats, const HarnessOptions& options) {
  CellResult cell;
  cell.cfg = cfg;
  cell.mode = mode_label(cfg.sleep_mode, options.transport);
  cell.repeats = repeats;
  try {
    if (repeats == 0) throw Error(Errc::InvalidArgument, "repeats must be at least 1");
    std::vector<RunReport> reports;
    for (std::size_t r = 0; r < repeats; ++r) {
      auto c = cfg;
      c.seed = cfg.seed + r;
      reports.push_back(run_pair(c, options));
      cell.overheads.push_back(reports.back().overhead_pct);
    }
    auto& m = cell.mean;
    m = reports.front();
    const auto n = static_cast<double>(repeats);
    auto avg = [&](auto field) {
      double sum = 0;
      for (const auto& r : reports) sum += static_cast<double>(r.*field);
      return sum / n;
    };
    auto avg_count = [&](auto field) { return static_cast<std::uint64_t>(avg(field) + 0.5); };
    m.t_base_ms = avg(&RunReport::t_base_ms);
    m.t_capture_ms = avg(&RunReport::t_capture_ms);
    m.blocked_ms = avg(&RunReport::blocked_ms);
    m.host_cpu_ms = avg(&RunReport::host_cpu_ms);
    m.overhead_pct = mean(cell.overheads);
    m.envelopes = avg_count(&RunReport::envelopes);
    m.records = avg_count(&RunReport::records);
    m.bytes_on_wire = avg_count(&RunReport::bytes_on_wire);
    m.retransmissions = avg_count(&RunReport::retransmissions);
    for (std::size_t r = 1; r < reports.size(); ++r) {
      for (auto& p : reports[r].problems) m.problems.push_back(std::move(p));
    }
    cell.ci95_pct = ci95_half_width(cell.overheads);
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

}  // namespace edgeprov::bench
