#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "edgeprov/capture/io.hpp"
#include "edgeprov/translator/translator.hpp"

namespace edgeprov::translator {

/// Translators sharded by topic: every topic always lands on the same
/// worker, and workers share nothing but the store and the sink.
/// With zero workers, envelopes are processed inline by the caller.
class Partitioned {
 public:
  Partitioned(std::size_t workers, const TranslatorConfig& config);
  ~Partitioned();

  void submit(const std::string& topic, Bytes envelope, Micros now);
  /// Blocks until every submitted envelope has been processed.
  void wait_idle();

  std::vector<std::string> expire(Micros now);
  std::vector<std::string> flush_all();
  std::size_t retry_sink();

  TranslatorStats stats();
  /// Runs `fn` on each translator with its worker paused.
  void visit(const std::function<void(Translator&)>& fn);
  std::size_t shards() const noexcept { return shards_.size(); }

 private:
  struct Job {
    std::string topic;
    Bytes envelope;
    Micros now;
  };
  struct Shard {
    explicit Shard(const TranslatorConfig& c) : translator(c) {}
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Job> queue;
    bool busy = false;
    Translator translator;
    std::thread thread;
  };

  Shard& shard_for(const std::string& topic);
  void work(Shard& shard);

  bool inline_ = false;
  std::vector<std::unique_ptr<Shard>> shards_;
  std::atomic<bool> stop_{false};
};

struct ServiceConfig {
  std::string broker_addr = "127.0.0.1:1883";
  std::string client_id = "translator";
  std::string filter = "prov/+";
  std::size_t workers = 1;
  TranslatorConfig translator;
  Micros connect_timeout = std::chrono::seconds(10);
};

/// Subscribes to the broker over UDP and feeds every delivery to the
/// partitioned translators.
class TranslatorService {
 public:
  /// ConnectFailed when the broker does not answer.
  explicit TranslatorService(ServiceConfig config);
  ~TranslatorService();

  /// Moves deliveries that arrive within `timeout` to the workers.
  void poll(Micros timeout);
  /// Polls until `stop` is set, expiring idle workflows along the way.
  void run(const std::atomic<bool>& stop);
  /// Drains workers, persists unfinished workflows and disconnects.
  std::vector<std::string> shutdown();

  Partitioned& workers() noexcept { return workers_; }

 private:
  ServiceConfig config_;
  capture::UdpSessionIo io_;
  Partitioned workers_;
  bool down_ = false;
};

}  // namespace edgeprov::translator
