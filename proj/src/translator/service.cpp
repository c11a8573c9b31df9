#include "edgeprov/translator/service.hpp"

#include <iostream>

#include "edgeprov/error.hpp"

namespace edgeprov::translator {

Partitioned::Partitioned(std::size_t workers, const TranslatorConfig& config) : inline_(workers == 0) {
  const auto n = std::max<std::size_t>(1, workers);
  for (std::size_t i = 0; i < n; ++i) shards_.push_back(std::make_unique<Shard>(config));
  if (inline_) return;
  for (auto& s : shards_) {
    Shard* shard = s.get();
    shard->thread = std::thread([this, shard] { work(*shard); });
  }
}

Partitioned::~Partitioned() {
  stop_ = true;
  for (auto& s : shards_) {
    {
      std::lock_guard lock(s->mu);
    }
    s->cv.notify_all();
    if (s->thread.joinable()) s->thread.join();
  }
}

Partitioned::Shard& Partitioned::shard_for(const std::string& topic) {
  return *shards_[std::hash<std::string>{}(topic) % shards_.size()];
}

void Partitioned::submit(const std::string& topic, Bytes envelope, Micros now) {
  auto& shard = shard_for(topic);
  if (inline_) {
    shard.translator.ingest_envelope(topic, envelope, now);
    return;
  }
  {
    std::lock_guard lock(shard.mu);
    shard.queue.push_back({topic, std::move(envelope), now});
  }
  shard.cv.notify_all();
}

void Partitioned::work(Shard& shard) {
  std::unique_lock lock(shard.mu);
  while (true) {
    shard.cv.wait(lock, [&] { return stop_ || !shard.queue.empty(); });
    if (shard.queue.empty()) return;  // stopping
    auto job = std::move(shard.queue.front());
    shard.queue.pop_front();
    shard.busy = true;
    lock.unlock();
    try {
      shard.translator.ingest_envelope(job.topic, job.envelope, job.now);
    } catch (const std::exception& e) {
      std::cerr << "translator: " << job.topic << ": " << e.what() << "\n";
    }
    lock.lock();
    shard.busy = false;
    shard.cv.notify_all();
  }
}

void Partitioned::wait_idle() {
  if (inline_) return;
  for (auto& s : shards_) {
    std::unique_lock lock(s->mu);
    s->cv.wait(lock, [&] { return s->queue.empty() && !s->busy; });
  }
}

void Partitioned::visit(const std::function<void(Translator&)>& fn) {
  for (auto& s : shards_) {
    std::unique_lock lock(s->mu);
    s->cv.wait(lock, [&] { return !s->busy; });
    fn(s->translator);
  }
}

std::vector<std::string> Partitioned::expire(Micros now) {
  std::vector<std::string> out;
  visit([&](Translator& t) {
    for (auto& id : t.expire(now)) out.push_back(std::move(id));
  });
  return out;
}

std::vector<std::string> Partitioned::flush_all() {
  wait_idle();
  std::vector<std::string> out;
  visit([&](Translator& t) {
    for (auto& id : t.flush_all()) out.push_back(std::move(id));
  });
  return out;
}

std::size_t Partitioned::retry_sink() {
  std::size_t owed = 0;
  visit([&](Translator& t) { owed += t.retry_sink(); });
  return owed;
}

TranslatorStats Partitioned::stats() {
  TranslatorStats total;
  visit([&](Translator& t) {
    const auto& s = t.stats();
    total.envelopes += s.envelopes;
    total.records += s.records;
    total.applied += s.applied;
    total.malformed += s.malformed;
    total.violations += s.violations;
    total.rejected += s.rejected;
    total.documents += s.documents;
    total.incomplete += s.incomplete;
    total.sink_failures += s.sink_failures;
  });
  return total;
}

namespace {

transport::ClientConfig session_config(const ServiceConfig& c) {
  transport::ClientConfig cc;
  cc.client_id = c.client_id;
  return cc;
}

}  // namespace

TranslatorService::TranslatorService(ServiceConfig config)
    : config_(std::move(config)),
      io_(session_config(config_), config_.broker_addr),
      workers_(config_.workers, config_.translator) {
  using transport::SessionState;
  io_.with_session([&](transport::ClientSession& s) { s.connect(io_.now()); });
  io_.wait_until([](transport::ClientSession& s) { return s.state() != SessionState::Connecting; },
                 io_.now() + config_.connect_timeout);
  bool ok = false;
  io_.with_session([&](transport::ClientSession& s) {
    ok = s.state() == SessionState::Connected;
    if (ok) s.subscribe(config_.filter, io_.now());
  });
  if (!ok) throw Error(Errc::ConnectFailed, "translator cannot connect to " + config_.broker_addr);
  io_.wait_until(
      [&](transport::ClientSession& s) { return s.subscribed(config_.filter) || s.request_error(config_.filter); },
      io_.now() + config_.connect_timeout);
  io_.with_session([&](transport::ClientSession& s) { ok = s.subscribed(config_.filter); });
  if (!ok) throw Error(Errc::ConnectFailed, "translator cannot subscribe to " + config_.filter);
}

TranslatorService::~TranslatorService() {
  try {
    shutdown();
  } catch (...) {
  }
}

void TranslatorService::poll(Micros timeout) {
  io_.wait_until([](transport::ClientSession& s) { return s.has_deliveries(); }, io_.now() + timeout);
  std::vector<transport::Delivery> got;
  io_.with_session([&](transport::ClientSession& s) { got = s.drain_deliveries(); });
  for (auto& d : got) workers_.submit(d.topic, std::move(d.payload), io_.now());
}

void TranslatorService::run(const std::atomic<bool>& stop) {
  using namespace std::chrono_literals;
  auto last_expire = io_.now();
  while (!stop) {
    poll(100ms);
    if (io_.now() - last_expire >= 1s) {
      workers_.expire(io_.now());
      workers_.retry_sink();
      last_expire = io_.now();
    }
  }
}

std::vector<std::string> TranslatorService::shutdown() {
  if (down_) return {};
  down_ = true;
  poll(Micros{0});
  auto flushed = workers_.flush_all();
  io_.with_session([&](transport::ClientSession& s) { s.disconnect(io_.now()); });
  return flushed;
}

}  // namespace edgeprov::translator
