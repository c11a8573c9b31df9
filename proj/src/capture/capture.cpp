#include "edgeprov/capture/capture.hpp"

#include <cstdlib>

#include "edgeprov/error.hpp"
#include "edgeprov/transport/frame.hpp"
#include "edgeprov/wire/envelope.hpp"

namespace edgeprov::capture {

void CaptureConfig::validate() const {
  if (client_id.empty() || client_id.size() > transport::kMaxClientIdBytes) {
    throw Error(Errc::InvalidArgument, "client_id must be 1..23 bytes");
  }
  if (topic().empty()) throw Error(Errc::InvalidArgument, "empty workflow topic");
}

std::string effective_broker(const CaptureConfig& config) {
  if (const char* env = std::getenv("PROVLIGHT_BROKER"); env && *env) return env;
  return config.broker_addr;
}

std::unique_ptr<PubSubChannel> PubSubChannel::udp(const CaptureConfig& config) {
  transport::ClientConfig cc;
  cc.client_id = config.client_id;
  cc.retry = config.retry;
  auto io = std::make_unique<UdpSessionIo>(cc, effective_broker(config));
  auto channel = std::make_unique<PubSubChannel>(*io);
  channel->owned_ = std::move(io);
  return channel;
}

void PubSubChannel::open(const CaptureConfig& config) {
  using transport::SessionState;
  io_.with_session([&](transport::ClientSession& s) { s.connect(io_.now()); });
  io_.wait_until([](transport::ClientSession& s) { return s.state() != SessionState::Connecting; },
                 io_.now() + config.connect_timeout);
  std::string why;
  bool connected = false;
  io_.with_session([&](transport::ClientSession& s) {
    connected = s.state() == SessionState::Connected;
    if (!connected) why = s.connect_error() ? s.connect_error()->what() : "no CONNACK in time";
    last_stats_ = s.stats();
  });
  if (!connected) throw Error(Errc::ConnectFailed, "cannot connect to broker: " + why);

  const auto topic = config.topic();
  io_.with_session([&](transport::ClientSession& s) { s.register_topic(topic, io_.now()); });
  io_.wait_until(
      [&](transport::ClientSession& s) {
        return s.topic_id(topic) || s.request_error(topic) || s.state() != SessionState::Connected;
      },
      io_.now() + config.connect_timeout);
  io_.with_session([&](transport::ClientSession& s) {
    if (auto id = s.topic_id(topic)) topic_id_ = *id;
    else why = s.request_error(topic) ? s.request_error(topic)->what() : "no REGACK in time";
    last_stats_ = s.stats();
  });
  if (topic_id_ == 0) throw Error(Errc::ConnectFailed, "cannot register topic " + topic + ": " + why);
}

void PubSubChannel::collect_acks(transport::ClientSession& s) {
  for (const auto& ack : s.poll_acks()) {
    if (outstanding_.erase(ack.publication) && !ack.delivered) ++failed_;
  }
  last_stats_ = s.stats();
}

void PubSubChannel::send(Bytes envelope) {
  io_.with_session([&](transport::ClientSession& s) {
    outstanding_.insert(s.publish(topic_id_, envelope, io_.now()));
    collect_acks(s);
  });
}

std::size_t PubSubChannel::drain(Micros deadline) {
  io_.wait_until(
      [](transport::ClientSession& s) {
        return s.unacked() == 0 || s.state() != transport::SessionState::Connected;
      },
      deadline);
  io_.with_session([&](transport::ClientSession& s) { collect_acks(s); });
  return failed_ + outstanding_.size();
}

void PubSubChannel::close() {
  io_.with_session([&](transport::ClientSession& s) {
    s.disconnect(io_.now());
    last_stats_ = s.stats();
  });
}

ChannelStats PubSubChannel::stats() const {
  return {last_stats_.bytes_sent + last_stats_.bytes_received, last_stats_.retransmissions,
          failed_ + outstanding_.size()};
}

// Adds the time spent in a capture call to the workflow's counters.
class Workflow::Timed {
 public:
  explicit Timed(Workflow& wf)
      : wf_(wf), start_(wf.channel_->runtime().now()), host_start_(std::chrono::steady_clock::now()) {}
  ~Timed() {
    wf_.stats_.capture_wall_ms += to_ms(wf_.channel_->runtime().now() - start_);
    wf_.stats_.host_cpu_ms +=
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - host_start_).count();
  }

 private:
  Workflow& wf_;
  Micros start_;
  std::chrono::steady_clock::time_point host_start_;
};

Workflow::Workflow(std::string id, CaptureConfig config, std::unique_ptr<Channel> channel)
    : id_(std::move(id)), config_(std::move(config)), channel_(std::move(channel)), grouping_(config_.group_size) {}

Workflow::~Workflow() {
  if (!active_) return;
  try {
    channel_->close();
  } catch (...) {
  }
}

std::unique_ptr<Workflow> Workflow::begin(std::string workflow_id, CaptureConfig config) {
  config.validate();
  auto channel = PubSubChannel::udp(config);
  return begin(std::move(workflow_id), std::move(config), std::move(channel));
}

std::unique_ptr<Workflow> Workflow::begin(std::string workflow_id, CaptureConfig config,
                                          std::unique_ptr<Channel> channel) {
  config.validate();
  if (workflow_id.empty()) throw Error(Errc::InvalidArgument, "empty workflow id");
  std::unique_ptr<Workflow> wf(new Workflow(std::move(workflow_id), std::move(config), std::move(channel)));
  {
    Timed timed(*wf);
    const auto before = wf->channel_->runtime().now();
    wf->channel_->open(wf->config_);
    wf->stats_.blocked_ms += to_ms(wf->channel_->runtime().now() - before);
    wf->active_ = true;
    wf->emit(wf->grouping_.push(CaptureRecord::workflow_begin(wf->id_, wf->timestamp())));
  }
  return wf;
}

std::int64_t Workflow::timestamp() const { return channel_->runtime().clock().epoch_ms(); }

void Workflow::emit(std::vector<CaptureRecord> batch) {
  if (batch.empty()) return;
  auto envelope = wire::seal_envelope(batch, config_.compress);
  const auto before = channel_->runtime().now();
  channel_->send(std::move(envelope));
  stats_.blocked_ms += to_ms(channel_->runtime().now() - before);
  ++stats_.envelopes;
  stats_.records += batch.size();
  for (auto& r : batch) emitted_.push_back(std::move(r));
}

Task Workflow::begin_task(std::string task_id, std::vector<std::string> dependencies,
                          const std::vector<DataPayload>& inputs) {
  if (!active_) throw Error(Errc::WorkflowNotActive, "workflow " + id_ + " is not active");
  if (task_id.empty()) throw Error(Errc::InvalidArgument, "empty task id");
  if (tasks_.contains(task_id)) throw Error(Errc::InvalidArgument, "task " + task_id + " already begun");
  Timed timed(*this);
  auto record = CaptureRecord::task_begin(id_, task_id, std::move(dependencies), inputs, timestamp());
  tasks_.insert(task_id);
  emit(grouping_.push(std::move(record)));
  return Task(this, std::move(task_id));
}

void Task::end(const std::vector<DataPayload>& outputs) { wf_->end_task(*this, outputs); }

void Workflow::end_task(Task& task, const std::vector<DataPayload>& outputs) {
  if (!active_) throw Error(Errc::WorkflowNotActive, "workflow " + id_ + " is not active");
  if (!task.active_) throw Error(Errc::TaskNotActive, "task " + task.id_ + " already ended");
  Timed timed(*this);
  task.active_ = false;
  emit(grouping_.push(CaptureRecord::task_end(id_, task.id_, outputs, timestamp())));
}

CaptureStats Workflow::end() {
  if (!active_) throw Error(Errc::WorkflowNotActive, "workflow " + id_ + " is not active");
  std::size_t undelivered = 0;
  {
    Timed timed(*this);
    emit(grouping_.flush());
    emit(grouping_.push(CaptureRecord::workflow_end(id_, timestamp())));
    active_ = false;
    auto& rt = channel_->runtime();
    const auto before = rt.now();
    undelivered = channel_->drain(rt.now() + config_.flush_timeout);
    channel_->close();
    stats_.blocked_ms += to_ms(rt.now() - before);
  }
  const auto cs = channel_->stats();
  stats_.bytes_on_wire = cs.bytes_on_wire;
  stats_.retransmissions = cs.retransmissions;
  stats_.undelivered = undelivered;
  if (undelivered > 0) {
    throw Error(Errc::FlushTimeout, std::to_string(undelivered) + " envelope(s) undelivered for workflow " + id_);
  }
  return stats_;
}

}  // namespace edgeprov::capture
