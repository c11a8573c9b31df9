#include <gtest/gtest.h>

#include <cstdlib>

#include "edgeprov/capture/capture.hpp"
#include "edgeprov/prov/graph.hpp"
#include "edgeprov/wire/envelope.hpp"

using namespace edgeprov;
using namespace edgeprov::capture;
using namespace edgeprov::transport;
using namespace std::chrono_literals;

namespace {

// A World with one subscriber on "prov/+" that records every envelope.
struct Rig {
  World world;
  std::size_t sub = 0;
  std::vector<std::vector<CaptureRecord>> envelopes;

  Rig() {
    sub = world.add_client({"translator"});
    world.client(sub).connect(world.now());
    world.run_until([&] { return world.client(sub).state() == SessionState::Connected; }, 10s);
    world.client(sub).subscribe("prov/+", world.now());
    world.run_until([&] { return world.client(sub).subscribed("prov/+"); }, 20s);
    world.on_delivery(sub, [this](std::vector<Delivery> ds) {
      for (auto& d : ds) envelopes.push_back(wire::open_envelope(d.payload));
    });
  }

  CaptureConfig config(const std::string& client, std::size_t group = 0, bool compress = true) {
    CaptureConfig c;
    c.client_id = client;
    c.group_size = group;
    c.compress = compress;
    return c;
  }

  // Runs `body` as a capture client on its own node, then lets the network settle.
  void run(const std::string& client, const std::function<void(Actor&)>& body, LinkConfig up = {},
           LinkConfig down = {}) {
    const auto node = world.add_client({client}, up, down);
    SimScheduler sched(world);
    sched.spawn(body, node);
    sched.run();
    world.run_until(world.now() + 30s);
  }

  std::vector<CaptureRecord> records() const {
    std::vector<CaptureRecord> all;
    for (const auto& e : envelopes) all.insert(all.end(), e.begin(), e.end());
    return all;
  }
};

std::unique_ptr<Workflow> start(Actor& a, const std::string& wf, CaptureConfig cfg) {
  return Workflow::begin(wf, std::move(cfg), std::make_unique<PubSubChannel>(a));
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::Io;
}

}  // namespace

TEST(Capture, BeginPublishesWorkflowBegin) {
  Rig rig;
  CaptureStats stats;
  rig.run("dev-1", [&](Actor& a) {
    auto wf = start(a, "wf1", rig.config("dev-1"));
    stats = wf->end();
  });
  ASSERT_EQ(rig.envelopes.size(), 2u);
  EXPECT_EQ(rig.envelopes[0].at(0).kind, RecordKind::WorkflowBegin);
  EXPECT_EQ(rig.envelopes[0].at(0).workflow_id, "wf1");
  EXPECT_EQ(rig.envelopes[1].at(0).kind, RecordKind::WorkflowEnd);
  EXPECT_EQ(stats.envelopes, 2u);
  EXPECT_EQ(stats.records, 2u);
  EXPECT_EQ(stats.undelivered, 0u);
}

TEST(Capture, TrainingRunInputsReachTheBroker) {
  Rig rig;
  rig.run("dev-1", [&](Actor& a) {
    auto wf = start(a, "wf1", rig.config("dev-1"));
    auto t1 = wf->begin_task("t1", {}, {Data("i1").attr("lr", 0.01).attr("epochs", 100)});
    a.sleep_for(1s);
    t1.end({Data("o1").derived_from("i1").attr("accuracy", 0.93)});
    wf->end();
  });
  const auto records = rig.records();
  ASSERT_EQ(records.size(), 4u);
  const auto& begin = records[1];
  EXPECT_EQ(begin.kind, RecordKind::TaskBegin);
  ASSERT_EQ(begin.data.size(), 1u);
  const DataPayload want{"i1", {}, {{"lr", 0.01}, {"epochs", std::int64_t{100}}}};
  EXPECT_EQ(begin.data[0], want);
  EXPECT_GE(records[2].timestamp - records[1].timestamp, 1000);
}

TEST(Capture, ApiMisuse) {
  Rig rig;
  rig.run("dev-1", [&](Actor& a) {
    auto wf = start(a, "wf1", rig.config("dev-1"));
    auto t = wf->begin_task("t1");
    EXPECT_EQ(code_of([&] { wf->begin_task("t1"); }), Errc::InvalidArgument);
    EXPECT_EQ(code_of([&] { wf->begin_task(""); }), Errc::InvalidArgument);
    t.end();
    EXPECT_FALSE(t.active());
    EXPECT_EQ(code_of([&] { t.end(); }), Errc::TaskNotActive);
    auto open = wf->begin_task("t2");
    wf->end();
    EXPECT_FALSE(wf->active());
    EXPECT_EQ(code_of([&] { wf->begin_task("t3"); }), Errc::WorkflowNotActive);
    EXPECT_EQ(code_of([&] { open.end(); }), Errc::WorkflowNotActive);
    EXPECT_EQ(code_of([&] { wf->end(); }), Errc::WorkflowNotActive);
  });
}

TEST(Capture, ConfigValidation) {
  CaptureConfig c;
  EXPECT_EQ(code_of([&] { c.validate(); }), Errc::InvalidArgument);
  c.client_id = std::string(24, 'x');
  EXPECT_EQ(code_of([&] { c.validate(); }), Errc::InvalidArgument);
  c.client_id = "dev";
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.topic(), "prov/dev");
}

TEST(Capture, BrokerFromEnvironment) {
  CaptureConfig c;
  c.broker_addr = "10.0.0.1:1883";
  unsetenv("PROVLIGHT_BROKER");
  EXPECT_EQ(effective_broker(c), "10.0.0.1:1883");
  setenv("PROVLIGHT_BROKER", "192.168.1.9:2000", 1);
  EXPECT_EQ(effective_broker(c), "192.168.1.9:2000");
  unsetenv("PROVLIGHT_BROKER");
}

TEST(Capture, ChainedTasksRebuildTheChain) {
  Rig rig;
  rig.run("dev-1", [&](Actor& a) {
    auto wf = start(a, "wf1", rig.config("dev-1"));
    std::string prev;
    for (int i = 1; i <= 5; ++i) {
      const auto id = "t" + std::to_string(i);
      auto t = wf->begin_task(id, prev.empty() ? std::vector<std::string>{} : std::vector<std::string>{prev});
      t.end();
      prev = id;
    }
    wf->end();
  });
  prov::GraphBuilder b;
  for (const auto& r : rig.records()) b.apply(r);
  const auto& g = b.graph();
  ASSERT_EQ(g.tasks.size(), 5u);
  EXPECT_TRUE(g.tasks.at("t1").dependencies.empty());
  for (int i = 2; i <= 5; ++i) {
    EXPECT_EQ(g.tasks.at("t" + std::to_string(i)).dependencies, std::vector<std::string>{"t" + std::to_string(i - 1)});
  }
  EXPECT_TRUE(prov::validate_graph(g).empty());
}

TEST(Capture, GroupingControlsEnvelopeCount) {
  for (std::size_t group : {0u, 50u}) {
    Rig rig;
    CaptureStats stats;
    rig.run("dev-1", [&](Actor& a) {
      auto wf = start(a, "wf1", rig.config("dev-1", group));
      for (int i = 0; i < 100; ++i) {
        auto t = wf->begin_task("t" + std::to_string(i));
        t.end({Data("o" + std::to_string(i)).attr("v", i)});
      }
      stats = wf->end();
    });
    EXPECT_EQ(stats.envelopes, group == 0 ? 202u : 104u);
    EXPECT_EQ(rig.envelopes.size(), stats.envelopes);
    EXPECT_EQ(stats.records, 202u);
    std::size_t batches = 0;
    for (const auto& e : rig.envelopes) batches += e.size() > 1;
    EXPECT_EQ(batches, group == 0 ? 0u : 2u);
  }
}

TEST(Capture, CompressionShrinksTraffic) {
  std::uint64_t bytes[2] = {};
  for (bool compress : {false, true}) {
    Rig rig;
    rig.run("dev-1", [&](Actor& a) {
      auto wf = start(a, "wf1", rig.config("dev-1", 0, compress));
      for (int i = 0; i < 20; ++i) {
        Data out("o" + std::to_string(i));
        for (int k = 0; k < 100; ++k) out.attr("attribute_" + std::to_string(k), 0.5 * k + i);
        auto t = wf->begin_task("t" + std::to_string(i));
        t.end({out});
      }
      bytes[compress] = wf->end().bytes_on_wire;
    });
  }
  EXPECT_LT(bytes[1], bytes[0]);
}

TEST(Capture, UnreachableBrokerFailsToConnect) {
  Rig rig;
  LinkConfig dead;
  dead.loss_prob = 1.0;
  Micros failed_at{0};
  Errc code = Errc::Io;
  const auto started = rig.world.now();
  rig.run(
      "dev-1",
      [&](Actor& a) {
        code = code_of([&] { start(a, "wf1", rig.config("dev-1")); });
        failed_at = a.now();
      },
      dead);
  EXPECT_EQ(code, Errc::ConnectFailed);
  EXPECT_EQ(failed_at - started, 3750ms);
}

TEST(Capture, TwoWorkflowsTwoSessionsTwoTopics) {
  Rig rig;
  const auto a_node = rig.world.add_client({"dev-a"});
  const auto b_node = rig.world.add_client({"dev-b"});
  SimScheduler sched(rig.world);
  for (auto [node, id] : {std::pair{a_node, "dev-a"}, std::pair{b_node, "dev-b"}}) {
    sched.spawn(
        [&, id = std::string(id)](Actor& a) {
          auto wf = start(a, "wf-" + id, rig.config(id));
          auto t = wf->begin_task("t");
          a.sleep_for(500ms);
          t.end();
          wf->end();
        },
        node);
  }
  sched.run();
  rig.world.run_until(rig.world.now() + 10s);
  EXPECT_TRUE(rig.world.broker().topic_id("prov/dev-a"));
  EXPECT_TRUE(rig.world.broker().topic_id("prov/dev-b"));
  EXPECT_EQ(rig.world.broker().topics().size(), 2u);
  EXPECT_EQ(rig.world.broker().session_count(), 1u);  // both devices disconnected at end()
  EXPECT_EQ(rig.records().size(), 8u);
}

TEST(Capture, EmittedRecordsMatchWhatArrives) {
  Rig rig;
  std::vector<CaptureRecord> emitted;
  LinkConfig lossy{0.1, 0.05, 0.05, 1'000'000'000, 1ms, 3};
  auto down = lossy;
  down.seed = 4;
  rig.run(
      "dev-1",
      [&](Actor& a) {
        auto wf = start(a, "wf1", rig.config("dev-1", 7));
        for (int i = 0; i < 30; ++i) {
          auto t = wf->begin_task("t" + std::to_string(i), {}, {Data("i" + std::to_string(i)).attr("x", i)});
          a.sleep_for(100ms);
          t.end({Data("o" + std::to_string(i)).derived_from("i" + std::to_string(i))});
        }
        wf->end();
        emitted = wf->emitted();
      },
      lossy, down);
  EXPECT_EQ(rig.records(), emitted);
}

TEST(Capture, DataAttributeTypes) {
  const DataPayload p = Data("d").attr("f", 0.5).attr("i", 3).attr("u", std::size_t{7}).attr("b", true).attr("s", "x");
  ASSERT_EQ(p.attributes.size(), 5u);
  EXPECT_EQ(p.attributes[0].value, Scalar{0.5});
  EXPECT_EQ(p.attributes[1].value, Scalar{std::int64_t{3}});
  EXPECT_EQ(p.attributes[2].value, Scalar{std::int64_t{7}});
  EXPECT_EQ(p.attributes[3].value, Scalar{true});
  EXPECT_EQ(p.attributes[4].value, Scalar{std::string("x")});
}
