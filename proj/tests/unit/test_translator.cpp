#include <gtest/gtest.h>

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "edgeprov/error.hpp"
#include "edgeprov/translator/query.hpp"
#include "edgeprov/translator/service.hpp"
#include "edgeprov/translator/sink.hpp"
#include "edgeprov/translator/store.hpp"
#include "edgeprov/translator/translator.hpp"
#include "edgeprov/wire/envelope.hpp"
#include "helpers.hpp"

using namespace edgeprov;
using namespace edgeprov::translator;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> n{0};
    path = fs::temp_directory_path() /
           ("edgeprov-test-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

Bytes env(std::vector<CaptureRecord> rs, bool compress = false) { return wire::seal_envelope(rs, compress); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Sink that can be switched off.
struct FlakySink : Sink {
  bool up = true;
  std::map<std::string, std::string> got;
  void deliver(const std::string& wf, const std::string& json) override {
    if (!up) throw Error(Errc::SinkUnavailable, "down");
    got[wf] = json;
  }
  std::string describe() const override { return "flaky"; }
};

// Records for a workflow of `tasks` tasks with an "accuracy" output each.
std::vector<CaptureRecord> scored_workflow(const std::string& wf, const std::vector<double>& scores) {
  std::vector<CaptureRecord> rs{CaptureRecord::workflow_begin(wf, 1000)};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto t = "t" + std::to_string(i);
    const auto start = 1000 + static_cast<std::int64_t>(i) * 100;
    rs.push_back(CaptureRecord::task_begin(wf, t, {}, {{"h" + std::to_string(i), {}, {{"lr", 0.001 * (i + 1)}}}}, start));
    rs.push_back(CaptureRecord::task_end(
        wf, t, {{"m" + std::to_string(i), {"h" + std::to_string(i)}, {{"accuracy", scores[i]}}}},
        start + 10 + static_cast<std::int64_t>(i)));
  }
  rs.push_back(CaptureRecord::workflow_end(wf, 9000));
  return rs;
}

}  // namespace

TEST(StoreNames, EscapeRoundTrip) {
  for (std::string id : {"wf1", "a/b", "../../etc", ".hidden", "spaces and %", "\xc3\xa9t\xc3\xa9", "-_x"}) {
    const auto name = escape_workflow_id(id);
    EXPECT_EQ(name.find('/'), std::string::npos) << id;
    EXPECT_NE(name.front(), '.');
    EXPECT_EQ(unescape_workflow_id(name), id);
  }
  EXPECT_EQ(escape_workflow_id("wf-1_a"), "wf-1_a");
  EXPECT_FALSE(unescape_workflow_id("%zz"));
  EXPECT_FALSE(unescape_workflow_id("a%2"));
}

TEST(Store, AtomicWriteReplacesWholeFile) {
  TempDir dir;
  const auto p = dir.path / "x.json";
  write_atomically(p, "first");
  write_atomically(p, "second");
  EXPECT_EQ(slurp(p), "second");
  std::size_t files = 0;
  for ([[maybe_unused]] auto& e : fs::directory_iterator(dir.path)) ++files;
  EXPECT_EQ(files, 1u);
}

TEST(Store, EventsAndDocumentsPersist) {
  TempDir dir;
  FileStore store(dir.path);
  const auto rs = test::training_run("../evil");
  store.append_events("../evil", {rs[0], rs[1]});
  store.append_events("../evil", {rs[2]});
  EXPECT_EQ(store.load_events("../evil"), (std::vector<CaptureRecord>{rs[0], rs[1], rs[2]}));
  EXPECT_TRUE(store.dir_for("../evil").string().starts_with(dir.path.string()));
  EXPECT_FALSE(store.load_document("../evil"));
  prov::ProvDocument doc;
  doc.agents.push_back({"../evil", 1, 2});
  store.write_document("../evil", doc);
  EXPECT_EQ(store.load_document("../evil"), doc);
  EXPECT_EQ(store.workflows(), std::vector<std::string>{"../evil"});
}

TEST(Store, StartupRemovesLeftoverTempFiles) {
  TempDir dir;
  {
    FileStore store(dir.path);
    store.write_document("wf", {});
  }
  // what a crash between write and rename leaves behind
  const auto leftover = dir.path / "wf" / "prov.json.tmp-99-0";
  std::ofstream(leftover) << "{\"agents\": [";
  FileStore again(dir.path);
  EXPECT_FALSE(fs::exists(leftover));
  EXPECT_TRUE(again.load_document("wf"));
}

TEST(Translator, WorkflowBeginCreatesGraph) {
  Translator t;
  const auto rep = t.ingest_envelope("prov/dev", env({CaptureRecord::workflow_begin("wf1", 5)}));
  EXPECT_EQ(rep.applied, 1u);
  ASSERT_TRUE(t.graph("wf1"));
  EXPECT_EQ(t.graph("wf1")->workflows.size(), 1u);
  EXPECT_EQ(t.active_workflows(), std::vector<std::string>{"wf1"});
}

TEST(Translator, BatchOfFiftyTaskEnds) {
  Translator t;
  std::vector<CaptureRecord> ends;
  t.ingest_envelope("p", env({CaptureRecord::workflow_begin("wf", 1)}));
  for (int i = 0; i < 50; ++i) {
    const auto id = "t" + std::to_string(i);
    t.ingest_envelope("p", env({CaptureRecord::task_begin("wf", id, {}, {}, 2)}));
    ends.push_back(CaptureRecord::task_end("wf", id, {{"o" + id, {}, {}}}, 3));
  }
  const auto rep = t.ingest_envelope("p", env(ends, true));
  EXPECT_EQ(rep.records, 50u);
  EXPECT_EQ(rep.applied, 50u);
  EXPECT_EQ(rep.pending, 0u);
}

TEST(Translator, EarlyTaskEndWaitsForItsBegin) {
  Translator t;
  const auto rs = test::training_run();
  t.ingest_envelope("p", env({rs[0]}));
  auto rep = t.ingest_envelope("p", env({rs[2]}));
  EXPECT_EQ(rep.pending, 1u);
  EXPECT_EQ(t.pending("wf1"), 1u);
  rep = t.ingest_envelope("p", env({rs[1]}));
  EXPECT_EQ(rep.applied, 2u);
  EXPECT_EQ(rep.pending, 0u);
  rep = t.ingest_envelope("p", env({rs[3]}));
  EXPECT_EQ(rep.completed, std::vector<std::string>{"wf1"});
}

TEST(Translator, MalformedEnvelopeCounted) {
  Translator t;
  const auto rep = t.ingest_envelope("p", Bytes{0x07, 0x00});
  EXPECT_TRUE(rep.malformed);
  EXPECT_EQ(t.stats().malformed, 1u);
}

TEST(Translator, TrainingRunDocumentMatchesExport) {
  TempDir dir;
  auto store = std::make_shared<FileStore>(dir.path);
  Translator t({store});
  for (const auto& r : test::training_run()) t.ingest_envelope("p", env({r}));
  ASSERT_TRUE(t.completed().contains("wf1"));
  const auto& done = t.completed().at("wf1");
  EXPECT_TRUE(done.violations.empty());
  prov::ProvGraph oracle;
  for (const auto& r : test::training_run()) prov::apply_record(oracle, r);
  EXPECT_EQ(done.graph, oracle);
  const auto doc = store->load_document("wf1");
  ASSERT_TRUE(doc);
  EXPECT_EQ(*doc, prov::export_prov(oracle));
  EXPECT_EQ(doc->count(prov::RelationshipKind::WasAttributedTo), 2u);
  EXPECT_FALSE(doc->incomplete);
  EXPECT_EQ(store->load_events("wf1"), test::training_run());
}

TEST(Translator, SinkOutageIsRetried) {
  TempDir dir;
  auto store = std::make_shared<FileStore>(dir.path);
  auto sink = std::make_shared<FlakySink>();
  sink->up = false;
  Translator t({store, sink});
  for (const auto& r : test::training_run()) t.ingest_envelope("p", env({r}));
  EXPECT_TRUE(store->load_document("wf1"));
  EXPECT_FALSE(t.completed().at("wf1").forwarded);
  EXPECT_EQ(t.stats().sink_failures, 1u);
  EXPECT_EQ(t.retry_sink(), 1u);
  sink->up = true;
  EXPECT_EQ(t.retry_sink(), 0u);
  EXPECT_TRUE(t.completed().at("wf1").forwarded);
  EXPECT_EQ(prov::document_from_json(sink->got.at("wf1")), *store->load_document("wf1"));
}

TEST(Translator, HttpSinkAgainstStubServer) {
  httplib::Server server;
  std::mutex mu;
  std::vector<std::pair<std::string, std::string>> posted;
  server.Post("/prov", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    posted.emplace_back(req.get_header_value("X-Workflow-Id"), req.body);
    res.status = 201;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto sink = make_sink("http://127.0.0.1:" + std::to_string(port) + "/prov");
  Translator t({nullptr, sink});
  for (const auto& r : test::training_run()) t.ingest_envelope("p", env({r}));
  server.stop();
  th.join();
  EXPECT_TRUE(t.completed().at("wf1").forwarded);
  ASSERT_EQ(posted.size(), 1u);
  EXPECT_EQ(posted[0].first, "wf1");
  EXPECT_EQ(prov::document_from_json(posted[0].second), t.completed().at("wf1").document);

  // nothing listens any more
  Translator t2({nullptr, sink});
  for (const auto& r : test::training_run()) t2.ingest_envelope("p", env({r}));
  EXPECT_FALSE(t2.completed().at("wf1").forwarded);
  EXPECT_EQ(t2.retry_sink(), 1u);
}

TEST(Translator, MakeSinkParses) {
  EXPECT_EQ(make_sink("null")->describe(), "null");
  EXPECT_EQ(make_sink("file:/tmp/x")->describe(), "file:/tmp/x");
  EXPECT_EQ(make_sink("http://h:81")->describe(), "http://h:81/prov");
  EXPECT_THROW(make_sink("ftp://x"), Error);
}

TEST(Translator, EveryRecordFlushKeepsAnIncompleteSnapshot) {
  TempDir dir;
  auto store = std::make_shared<FileStore>(dir.path);
  TranslatorConfig cfg{store};
  cfg.flush_on = FlushOn::EveryRecord;
  Translator t(cfg);
  const auto rs = test::training_run();
  t.ingest_envelope("p", env({rs[0], rs[1]}));
  auto doc = store->load_document("wf1");
  ASSERT_TRUE(doc);
  EXPECT_TRUE(doc->incomplete);
  EXPECT_EQ(doc->activities.size(), 1u);
  t.ingest_envelope("p", env({rs[2], rs[3]}));
  doc = store->load_document("wf1");
  EXPECT_FALSE(doc->incomplete);
}

TEST(Translator, TtlAndFlushAllMarkIncomplete) {
  TempDir dir;
  auto store = std::make_shared<FileStore>(dir.path);
  TranslatorConfig cfg{store};
  cfg.ttl = std::chrono::seconds(5);
  Translator t(cfg);
  const auto rs = test::training_run("a");
  t.ingest_envelope("p", env({rs[0], rs[1]}), std::chrono::seconds(1));
  t.ingest_envelope("p", env({test::training_run("b")[0]}), std::chrono::seconds(4));
  EXPECT_TRUE(t.expire(std::chrono::seconds(5)).empty());
  EXPECT_EQ(t.expire(std::chrono::seconds(7)), std::vector<std::string>{"a"});
  EXPECT_TRUE(store->load_document("a")->incomplete);
  EXPECT_EQ(t.flush_all(), std::vector<std::string>{"b"});
  EXPECT_TRUE(store->load_document("b")->incomplete);
  EXPECT_EQ(t.stats().incomplete, 2u);
}

TEST(Translator, SixtyFourWorkflowsInterleaved) {
  TempDir dir;
  auto store = std::make_shared<FileStore>(dir.path);
  Partitioned workers(4, TranslatorConfig{store});
  std::mt19937_64 rng(64);
  std::vector<std::vector<CaptureRecord>> streams;
  for (int w = 0; w < 64; ++w) {
    std::vector<double> scores(20);
    for (auto& s : scores) s = std::uniform_real_distribution<>(0, 1)(rng);
    streams.push_back(scored_workflow("wf" + std::to_string(w), scores));
  }
  std::vector<std::size_t> cursor(64, 0);
  std::size_t left = 64;
  while (left > 0) {
    const auto w = rng() % 64;
    if (cursor[w] == streams[w].size()) continue;
    workers.submit("prov/dev-" + std::to_string(w), env({streams[w][cursor[w]++]}), Micros{0});
    if (cursor[w] == streams[w].size()) --left;
  }
  workers.wait_idle();
  EXPECT_EQ(workers.stats().documents, 64u);
  EXPECT_EQ(store->workflows().size(), 64u);
  for (int w = 0; w < 64; ++w) {
    const auto doc = store->load_document("wf" + std::to_string(w));
    ASSERT_TRUE(doc);
    EXPECT_EQ(doc->activities.size(), 20u);
    EXPECT_EQ(store->load_events("wf" + std::to_string(w)).size(), streams[w].size());
  }
}

TEST(Query, TopThreeByAccuracyMatchesBruteForce) {
  std::mt19937_64 rng(10);
  std::vector<double> scores(10);
  for (auto& s : scores) s = std::uniform_real_distribution<>(0, 1)(rng);
  prov::ProvGraph g;
  for (const auto& r : scored_workflow("wf", scores)) prov::apply_record(g, r);
  const auto doc = prov::export_prov(g);

  Selector sel;
  sel.order_by = "accuracy";
  sel.limit = 3;
  const auto rows = query(doc, sel);
  auto sorted = scores;
  std::sort(sorted.rbegin(), sorted.rend());
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(std::get<double>(*rows[i].get("accuracy")), sorted[i]);

  // following the derivation back gives the hyperparameters of the best model
  const auto best = std::max_element(scores.begin(), scores.end()) - scores.begin();
  EXPECT_EQ(rows[0].id, "m" + std::to_string(best));
}

TEST(Query, AbsentKeyGivesNoRows) {
  prov::ProvGraph g;
  for (const auto& r : scored_workflow("wf", {0.1, 0.2})) prov::apply_record(g, r);
  Selector sel;
  sel.key = "loss";
  EXPECT_TRUE(query(prov::export_prov(g), sel).empty());
  sel.key.reset();
  sel.order_by = "loss";
  EXPECT_TRUE(query(prov::export_prov(g), sel).empty());
}

TEST(Query, TaskElapsedTimes) {
  prov::ProvGraph g;
  for (const auto& r : scored_workflow("wf", {0.1, 0.2, 0.3})) prov::apply_record(g, r);
  Selector sel;
  sel.target = Target::Tasks;
  sel.order_by = "start_time";
  sel.limit = 1;
  const auto latest = query(prov::export_prov(g), sel);
  ASSERT_EQ(latest.size(), 1u);
  EXPECT_EQ(latest[0].id, "t2");
  EXPECT_EQ(std::get<std::int64_t>(*latest[0].get("elapsed_ms")), 12);
  EXPECT_EQ(std::get<std::string>(*latest[0].get("status")), "finished");
}

TEST(Query, StoreLookup) {
  TempDir dir;
  FileStore store(dir.path);
  EXPECT_THROW(query_graph(store, "missing", {}), Error);
  prov::ProvGraph g;
  for (const auto& r : scored_workflow("wf", {0.5})) prov::apply_record(g, r);
  store.write_document("wf", prov::export_prov(g));
  EXPECT_EQ(query_graph(store, "wf", {}).size(), 2u);
}
