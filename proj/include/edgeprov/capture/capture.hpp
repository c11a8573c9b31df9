#pragma once

// Instrumentation API. A Workflow owns one transport session; tasks begun
// on it publish their records as they happen:
//
//   auto wf = Workflow::begin("wf1", config);
//   auto t1 = wf.begin_task("t1", {}, {Data("in1").attr("lr", 0.01)});
//   ...
//   t1.end({Data("out1").derived_from("in1").attr("loss", 0.3)});
//   auto stats = wf.end();

#include <chrono>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include "edgeprov/capture/io.hpp"
#include "edgeprov/model.hpp"
#include "edgeprov/transport/qos2.hpp"
#include "edgeprov/wire/grouping.hpp"

namespace edgeprov::capture {

using namespace std::chrono_literals;

struct CaptureConfig {
  std::string broker_addr = "127.0.0.1:1883";
  std::string client_id;
  std::size_t group_size = 0;
  bool compress = true;
  std::string workflow_topic;  // empty = "prov/<client_id>"
  transport::RetryPolicy retry;
  Micros connect_timeout = 10s;
  Micros flush_timeout = 120s;

  std::string topic() const { return workflow_topic.empty() ? "prov/" + client_id : workflow_topic; }
  /// InvalidArgument when client_id is empty or longer than 23 bytes.
  void validate() const;
};

/// broker_addr, replaced by PROVLIGHT_BROKER when that variable is set.
std::string effective_broker(const CaptureConfig& config);

/// Data handle. Values are copied when attached.
class Data {
 public:
  explicit Data(std::string id) { payload_.id = std::move(id); }

  Data& attr(std::string key, Scalar value) {
    payload_.attributes.push_back({std::move(key), std::move(value)});
    return *this;
  }
  Data& attr(std::string key, const char* value) { return attr(std::move(key), Scalar{std::string(value)}); }
  Data& attr(std::string key, std::string value) { return attr(std::move(key), Scalar{std::move(value)}); }
  // a plain int overload would capture doubles through the standard conversion
  template <class T>
    requires std::is_arithmetic_v<T>
  Data& attr(std::string key, T value) {
    if constexpr (std::is_same_v<T, bool>) {
      return attr(std::move(key), Scalar{value});
    } else if constexpr (std::is_integral_v<T>) {
      return attr(std::move(key), Scalar{static_cast<std::int64_t>(value)});
    } else {
      return attr(std::move(key), Scalar{static_cast<double>(value)});
    }
  }
  Data& derived_from(std::string id) {
    payload_.derivations.push_back(std::move(id));
    return *this;
  }

  const DataPayload& payload() const noexcept { return payload_; }
  operator DataPayload() const { return payload_; }

 private:
  DataPayload payload_;
};

struct ChannelStats {
  std::uint64_t bytes_on_wire = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t undelivered = 0;
};

/// Where envelopes go. The pub/sub channel publishes asynchronously; other
/// transports may block in send().
class Channel {
 public:
  virtual ~Channel() = default;
  /// ConnectFailed when the peer cannot be reached.
  virtual void open(const CaptureConfig& config) = 0;
  virtual void send(Bytes envelope) = 0;
  /// Waits for everything sent to be acknowledged. Returns the number of
  /// envelopes that are (or will never be) delivered in time: 0 on success.
  virtual std::size_t drain(Micros deadline) = 0;
  virtual void close() = 0;
  virtual ChannelStats stats() const = 0;
  virtual Runtime& runtime() = 0;
};

/// MQTT-SN publishing over any SessionIo.
class PubSubChannel final : public Channel {
 public:
  explicit PubSubChannel(SessionIo& io) : io_(io) {}
  /// Owns a UDP session to the configured broker.
  static std::unique_ptr<PubSubChannel> udp(const CaptureConfig& config);

  void open(const CaptureConfig& config) override;
  void send(Bytes envelope) override;
  std::size_t drain(Micros deadline) override;
  void close() override;
  ChannelStats stats() const override;
  Runtime& runtime() override { return io_; }

 private:
  void collect_acks(transport::ClientSession& s);

  std::unique_ptr<SessionIo> owned_;
  SessionIo& io_;
  std::uint16_t topic_id_ = 0;
  std::set<std::uint32_t> outstanding_;
  std::uint64_t failed_ = 0;
  transport::ClientStats last_stats_;
};

struct CaptureStats {
  std::uint64_t records = 0;
  std::uint64_t envelopes = 0;
  std::uint64_t bytes_on_wire = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t undelivered = 0;
  double capture_wall_ms = 0;  // time spent inside capture calls, on the runtime clock
  double blocked_ms = 0;       // part of it spent waiting on the network
  double host_cpu_ms = 0;      // host time spent inside capture calls
};

class Workflow;

class Task {
 public:
  const std::string& id() const noexcept { return id_; }
  /// TaskNotActive when already ended; WorkflowNotActive after the workflow ended.
  void end(const std::vector<DataPayload>& outputs = {});
  bool active() const noexcept { return active_; }

 private:
  friend class Workflow;
  Task(Workflow* wf, std::string id) : wf_(wf), id_(std::move(id)) {}

  Workflow* wf_;
  std::string id_;
  bool active_ = true;
};

class Workflow {
 public:
  /// Connects, registers the workflow topic and publishes WorkflowBegin.
  /// ConnectFailed when the broker cannot be reached.
  static std::unique_ptr<Workflow> begin(std::string workflow_id, CaptureConfig config,
                                         std::unique_ptr<Channel> channel);
  /// Same, over UDP to effective_broker(config).
  static std::unique_ptr<Workflow> begin(std::string workflow_id, CaptureConfig config);

  ~Workflow();
  Workflow(const Workflow&) = delete;
  Workflow& operator=(const Workflow&) = delete;

  /// Publishes TaskBegin immediately. WorkflowNotActive after end();
  /// InvalidArgument for a reused task id.
  Task begin_task(std::string task_id, std::vector<std::string> dependencies = {},
                  const std::vector<DataPayload>& inputs = {});

  /// Flushes pending groups, publishes WorkflowEnd, waits for every
  /// handshake and disconnects. FlushTimeout when envelopes stay undelivered
  /// (stats() still describes the run).
  CaptureStats end();

  const std::string& id() const noexcept { return id_; }
  bool active() const noexcept { return active_; }
  const CaptureStats& stats() const noexcept { return stats_; }
  /// Every record emitted, in emission order.
  const std::vector<CaptureRecord>& emitted() const noexcept { return emitted_; }
  Channel& channel() noexcept { return *channel_; }

 private:
  friend class Task;
  Workflow(std::string id, CaptureConfig config, std::unique_ptr<Channel> channel);

  void end_task(Task& task, const std::vector<DataPayload>& outputs);
  void emit(std::vector<CaptureRecord> batch);
  std::int64_t timestamp() const;

  class Timed;

  std::string id_;
  CaptureConfig config_;
  std::unique_ptr<Channel> channel_;
  wire::GroupingBuffer grouping_;
  std::set<std::string> tasks_;
  bool active_ = false;
  std::vector<CaptureRecord> emitted_;
  CaptureStats stats_;
};

}  // namespace edgeprov::capture
