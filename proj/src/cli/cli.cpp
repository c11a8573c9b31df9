#include "edgeprov/cli/cli.hpp"

#include <CLI11.hpp>
#include <toml.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "edgeprov/bench/sweep.hpp"
#include "edgeprov/error.hpp"
#include "edgeprov/json.hpp"
#include "edgeprov/prov/document.hpp"
#include "edgeprov/transport/udp.hpp"
#include "edgeprov/translator/query.hpp"
#include "edgeprov/translator/service.hpp"

namespace edgeprov::cli {

namespace {

using namespace std::chrono_literals;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config file values fill in whatever the command line left unset.
class ConfigFile {
 public:
  void load(const std::string& path) {
    try {
      table_ = toml::parse_file(path);
    } catch (const toml::parse_error& e) {
      throw UsageError("cannot read config " + path + ": " + std::string(e.description()));
    }
  }

  template <typename T>
  void fill(const char* section, const char* key, const CLI::Option* opt, T& var) const {
    if (opt && opt->count() > 0) return;
    const auto node = table_[section][key];
    if (!node) return;
    if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node.template value<std::string>()) var = *v;
      else throw UsageError(std::string(section) + "." + key + " must be a string");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node.template value<bool>()) var = *v;
      else throw UsageError(std::string(section) + "." + key + " must be a boolean");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto v = node.template value<double>()) var = *v;
      else throw UsageError(std::string(section) + "." + key + " must be a number");
    } else {
      auto v = node.template value<std::int64_t>();
      if (!v || *v < 0) throw UsageError(std::string(section) + "." + key + " must be a non-negative integer");
      var = static_cast<T>(*v);
    }
  }

 private:
  toml::table table_;
};

std::string default_broker() {
  if (const char* env = std::getenv("PROVLIGHT_BROKER"); env && *env) return env;
  return "127.0.0.1:1883";
}

// broker ---------------------------------------------------------------------

struct BrokerArgs {
  std::string bind = "0.0.0.0:1883";
  std::size_t max_sessions = 1024;
  CLI::Option* o_bind = nullptr;
  CLI::Option* o_max = nullptr;
};

int cmd_broker(const BrokerArgs& a) {
  transport::BrokerConfig bc;
  bc.max_sessions = a.max_sessions;
  transport::BrokerServer server(a.bind, bc);
  std::cerr << "broker listening on " << server.address() << "\n";
  install_signal_handlers();
  while (!g_stop) std::this_thread::sleep_for(100ms);
  server.stop();
  server.inspect([](const transport::Broker& b) {
    std::cerr << "sessions: " << b.session_count() << ", topics: " << b.topics().size()
              << ", malformed: " << b.malformed() << ", dropped forwards: " << b.dropped_forwards() << "\n";
    for (const auto& s : b.session_counters()) {
      std::cerr << "  " << s.client_id << " (" << s.address << (s.connected ? "" : ", disconnected")
                << "): in " << s.frames_in << " frames/" << s.bytes_in << " B, out " << s.frames_out << " frames/"
                << s.bytes_out << " B, published " << s.published << ", forwarded " << s.forwarded
                << ", retransmissions " << s.retransmissions << "\n";
    }
  });
  return 0;
}

// translator -----------------------------------------------------------------

struct TranslatorArgs {
  std::string broker = default_broker();
  std::string store;
  std::string sink;
  std::string filter = "prov/+";
  std::string client_id = "translator";
  std::size_t workers = 1;
  double ttl_s = 0;
  bool every_record = false;
  CLI::Option *o_broker = nullptr, *o_store = nullptr, *o_sink = nullptr, *o_filter = nullptr, *o_id = nullptr,
              *o_workers = nullptr, *o_ttl = nullptr, *o_every = nullptr;
};

int cmd_translator(const TranslatorArgs& a) {
  if (a.store.empty()) throw UsageError("translator needs --store (or translator.store in the config)");
  translator::ServiceConfig sc;
  sc.broker_addr = a.broker;
  sc.client_id = a.client_id;
  sc.filter = a.filter;
  sc.workers = a.workers;
  sc.translator.store = std::make_shared<translator::FileStore>(a.store);
  if (!a.sink.empty()) sc.translator.sink = translator::make_sink(a.sink);
  sc.translator.ttl = from_seconds(a.ttl_s);
  sc.translator.flush_on = a.every_record ? translator::FlushOn::EveryRecord : translator::FlushOn::WorkflowEnd;
  translator::TranslatorService service(sc);
  std::cerr << "translator subscribed to " << a.filter << " at " << a.broker << "\n";
  install_signal_handlers();
  service.run(g_stop);
  const auto flushed = service.shutdown();
  const auto stats = service.workers().stats();
  std::cerr << "envelopes " << stats.envelopes << ", records " << stats.records << ", documents " << stats.documents
            << ", incomplete " << stats.incomplete << ", malformed " << stats.malformed << "\n";
  for (const auto& wf : flushed) std::cerr << "  persisted unfinished workflow " << wf << "\n";
  return 0;
}

// bench ----------------------------------------------------------------------

struct BenchArgs {
  std::string preset;
  std::string mode = "virtual";
  std::string transport = "pubsub";
  std::string out = "bench.csv";
  std::size_t repeats = 10;
  std::uint64_t seed = 1;
  bench::WorkloadConfig w;
  bool no_compress = false;
  CLI::Option *o_preset = nullptr, *o_mode = nullptr, *o_transport = nullptr, *o_out = nullptr, *o_repeats = nullptr,
              *o_seed = nullptr, *o_tasks = nullptr, *o_attrs = nullptr, *o_duration = nullptr, *o_group = nullptr,
              *o_bandwidth = nullptr, *o_clients = nullptr, *o_transformations = nullptr, *o_no_compress = nullptr;
};

int cmd_bench(BenchArgs a) {
  a.w.seed = a.seed;
  a.w.compress = !a.no_compress;
  a.w.sleep_mode = a.mode == "real" ? bench::SleepMode::RealSleep : bench::SleepMode::VirtualClock;
  if (a.repeats == 0) throw UsageError("--repeats must be at least 1");
  try {
    a.w.validate();
    bench::link_preset(a.w.bandwidth);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  std::vector<bench::WorkloadConfig> cells;
  try {
    cells = a.preset.empty() ? std::vector{a.w} : bench::preset_grid(a.preset, a.w);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  std::vector<bench::TransportKind> kinds;
  if (a.transport != "baseline") kinds.push_back(bench::TransportKind::PubSub);
  if (a.transport != "pubsub") kinds.push_back(bench::TransportKind::Baseline);

  std::vector<bench::CellResult> results;
  for (auto kind : kinds) {
    bench::HarnessOptions options;
    options.transport = kind;
    auto part = bench::sweep(cells, a.repeats, options, [](const bench::CellResult& c) {
      std::cerr << bench::csv_row(c) << (c.error ? "  # " + *c.error : "") << "\n";
    });
    results.insert(results.end(), part.begin(), part.end());
  }

  if (a.out == "-") {
    bench::write_csv(std::cout, results);
  } else {
    std::ofstream f(a.out);
    if (!f) throw Error(Errc::Io, "cannot write " + a.out);
    bench::write_csv(f, results);
  }
  std::cout << "mode: " << bench::mode_label(a.w.sleep_mode, bench::TransportKind::PubSub)
            << (kinds.size() > 1 || kinds.front() == bench::TransportKind::Baseline ? " (and baseline rows in the CSV)"
                                                                                      : "")
            << "\n";
  std::vector<bench::CellResult> pubsub;
  for (const auto& r : results) {
    if (r.mode == results.front().mode) pubsub.push_back(r);
  }
  std::cout << bench::summary_grid(pubsub);
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.error.has_value();
  if (failed > 0) {
    std::cerr << failed << " cell(s) failed\n";
    return 1;
  }
  return 0;
}

// inspect --------------------------------------------------------------------

struct InspectArgs {
  std::string workflow;
  std::string store;
  std::size_t top = 0;
  std::string by;
  std::string key;
  bool tasks = false;
  bool ascending = false;
  bool document = false;
  CLI::Option* o_store = nullptr;
};

std::string show(const Scalar& v) {
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  return scalar_to_json(v).dump();
}

int cmd_inspect(const InspectArgs& a) {
  if (a.store.empty()) throw UsageError("inspect needs --store (or inspect.store in the config)");
  translator::FileStore store(a.store);
  if (a.workflow.empty()) {
    for (const auto& wf : store.workflows()) std::cout << wf << "\n";
    return 0;
  }
  const bool selecting = a.top > 0 || !a.by.empty() || !a.key.empty() || a.tasks;
  if (a.document || !selecting) {
    auto doc = store.load_document(a.workflow);
    if (!doc) throw Error(Errc::UnknownWorkflow, "no document for workflow " + a.workflow);
    std::cout << prov::to_json(*doc) << "\n";
    return 0;
  }
  translator::Selector sel;
  sel.target = a.tasks ? translator::Target::Tasks : translator::Target::Data;
  if (!a.key.empty()) sel.key = a.key;
  if (!a.by.empty()) sel.order_by = a.by;
  sel.descending = !a.ascending;
  if (a.top > 0) sel.limit = a.top;
  for (const auto& row : translator::query_graph(store, a.workflow, sel)) {
    std::cout << row.id;
    for (const auto& [k, v] : row.columns) std::cout << "  " << k << "=" << show(v);
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Workflow provenance capture for constrained clients: broker, translator, benchmark and query tool.",
               "edgeprov"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");
  std::string config_path;
  app.add_option("--config", config_path, "TOML file; command-line flags override its values")
      ->check(CLI::ExistingFile);

  BrokerArgs ba;
  auto* broker = app.add_subcommand("broker", "Run the MQTT-SN broker until interrupted");
  ba.o_bind = broker->add_option("--bind", ba.bind, "UDP address to listen on")->capture_default_str();
  ba.o_max = broker->add_option("--max-sessions", ba.max_sessions, "Concurrent client sessions accepted")
                 ->check(CLI::PositiveNumber)
                 ->capture_default_str();

  TranslatorArgs ta;
  auto* tr = app.add_subcommand("translator", "Subscribe to the broker and rebuild provenance graphs");
  ta.o_broker = tr->add_option("--broker", ta.broker, "Broker address (default: PROVLIGHT_BROKER or 127.0.0.1:1883)");
  ta.o_store = tr->add_option("--store", ta.store, "Store directory for events and documents");
  ta.o_sink = tr->add_option("--sink", ta.sink, "Backend for finished documents: null, file:DIR or http://HOST:PORT/PATH");
  ta.o_filter = tr->add_option("--filter", ta.filter, "Topic filter to subscribe to")->capture_default_str();
  ta.o_id = tr->add_option("--client-id", ta.client_id, "Client id of the translator session")->capture_default_str();
  ta.o_workers = tr->add_option("--workers", ta.workers, "Worker threads, partitioned by topic")
                     ->check(CLI::PositiveNumber)
                     ->capture_default_str();
  ta.o_ttl = tr->add_option("--ttl", ta.ttl_s, "Seconds of silence before a workflow is persisted as incomplete (0 = never)")
                 ->check(CLI::NonNegativeNumber)
                 ->capture_default_str();
  ta.o_every = tr->add_flag("--flush-every-record", ta.every_record, "Rewrite the document after every applied record");

  BenchArgs be;
  auto* bench = app.add_subcommand("bench", "Measure capture overhead against an uninstrumented run");
  be.o_preset = bench->add_option("--preset", be.preset, "Parameter grid to sweep")
                    ->check(CLI::IsMember({"table1", "table8", "table9"}));
  be.o_mode = bench->add_option("--mode", be.mode, "virtual: simulated clock; real: sockets and sleeps")
                  ->check(CLI::IsMember({"real", "virtual"}))
                  ->capture_default_str();
  be.o_transport = bench->add_option("--transport", be.transport, "Capture transport to measure")
                       ->check(CLI::IsMember({"pubsub", "baseline", "both"}))
                       ->capture_default_str();
  be.o_repeats = bench->add_option("--repeats", be.repeats, "Runs per cell")->check(CLI::PositiveNumber)->capture_default_str();
  be.o_seed = bench->add_option("--seed", be.seed, "Workload and link seed")->capture_default_str();
  be.o_tasks = bench->add_option("--tasks", be.w.tasks, "Tasks per workflow")->check(CLI::PositiveNumber)->capture_default_str();
  be.o_attrs = bench->add_option("--attrs", be.w.attrs, "Attributes per data record")
                   ->check(CLI::PositiveNumber)
                   ->capture_default_str();
  be.o_duration = bench->add_option("--duration", be.w.task_duration_s, "Seconds each task computes")
                      ->check(CLI::PositiveNumber)
                      ->capture_default_str();
  be.o_group = bench->add_option("--group", be.w.group_size, "Task ends per envelope (0 = no grouping)")->capture_default_str();
  be.o_bandwidth = bench->add_option("--bandwidth", be.w.bandwidth, "Link preset")
                       ->check(CLI::IsMember(bench::link_preset_names()))
                       ->capture_default_str();
  be.o_clients = bench->add_option("--clients", be.w.clients, "Concurrent capture clients")
                     ->check(CLI::PositiveNumber)
                     ->capture_default_str();
  be.o_transformations = bench->add_option("--transformations", be.w.transformations, "Chained stages")
                             ->check(CLI::PositiveNumber)
                             ->capture_default_str();
  be.o_no_compress = bench->add_flag("--no-compress", be.no_compress, "Send envelopes uncompressed");
  be.o_out = bench->add_option("--out", be.out, "CSV output path, - for stdout")->capture_default_str();

  InspectArgs ia;
  auto* inspect = app.add_subcommand("inspect", "Query a persisted workflow (lists workflows without an id)");
  inspect->add_option("workflow", ia.workflow, "Workflow id");
  ia.o_store = inspect->add_option("--store", ia.store, "Store directory written by the translator");
  inspect->add_option("--top", ia.top, "Keep the first K rows")->check(CLI::PositiveNumber);
  inspect->add_option("--by", ia.by, "Numeric column to order by (descending)");
  inspect->add_option("--key", ia.key, "Keep rows that have this column");
  inspect->add_flag("--tasks", ia.tasks, "Query tasks instead of data records");
  inspect->add_flag("--ascending", ia.ascending, "Order ascending");
  inspect->add_flag("--document", ia.document, "Print the whole PROV document");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!config_path.empty()) {
      ConfigFile cfg;
      cfg.load(config_path);
      cfg.fill("broker", "bind", ba.o_bind, ba.bind);
      cfg.fill("broker", "max_sessions", ba.o_max, ba.max_sessions);
      cfg.fill("translator", "broker", ta.o_broker, ta.broker);
      cfg.fill("translator", "store", ta.o_store, ta.store);
      cfg.fill("translator", "sink", ta.o_sink, ta.sink);
      cfg.fill("translator", "filter", ta.o_filter, ta.filter);
      cfg.fill("translator", "client_id", ta.o_id, ta.client_id);
      cfg.fill("translator", "workers", ta.o_workers, ta.workers);
      cfg.fill("translator", "ttl", ta.o_ttl, ta.ttl_s);
      cfg.fill("translator", "flush_every_record", ta.o_every, ta.every_record);
      cfg.fill("bench", "preset", be.o_preset, be.preset);
      cfg.fill("bench", "mode", be.o_mode, be.mode);
      cfg.fill("bench", "transport", be.o_transport, be.transport);
      cfg.fill("bench", "out", be.o_out, be.out);
      cfg.fill("bench", "repeats", be.o_repeats, be.repeats);
      cfg.fill("bench", "seed", be.o_seed, be.seed);
      cfg.fill("bench", "tasks", be.o_tasks, be.w.tasks);
      cfg.fill("bench", "attrs", be.o_attrs, be.w.attrs);
      cfg.fill("bench", "duration", be.o_duration, be.w.task_duration_s);
      cfg.fill("bench", "group", be.o_group, be.w.group_size);
      cfg.fill("bench", "bandwidth", be.o_bandwidth, be.w.bandwidth);
      cfg.fill("bench", "clients", be.o_clients, be.w.clients);
      cfg.fill("bench", "transformations", be.o_transformations, be.w.transformations);
      cfg.fill("bench", "no_compress", be.o_no_compress, be.no_compress);
      cfg.fill("inspect", "store", ia.o_store, ia.store);
      if (be.mode != "real" && be.mode != "virtual") throw UsageError("bench.mode must be real or virtual");
      if (be.transport != "pubsub" && be.transport != "baseline" && be.transport != "both") {
        throw UsageError("bench.transport must be pubsub, baseline or both");
      }
    }
    if (*broker) return cmd_broker(ba);
    if (*tr) return cmd_translator(ta);
    if (*bench) return cmd_bench(be);
    return cmd_inspect(ia);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for more information.\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace edgeprov::cli
