#pragma once

// Request/response comparison transport: every envelope is one
// length-prefixed request over a reliable byte stream, and the sender blocks
// until the one-byte acknowledgement comes back.

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "edgeprov/capture/capture.hpp"
#include "edgeprov/transport/link.hpp"

namespace edgeprov::bench {

inline constexpr std::size_t kRequestHeaderBytes = 4;  // u32 big-endian length
inline constexpr std::size_t kAckBytes = 1;

/// Reliable stream over emulated links on the runtime's clock. Loss,
/// duplication and reordering are ignored (the stream hides them); bandwidth
/// and delay apply. open() costs one round trip.
class VirtualBaselineChannel final : public capture::Channel {
 public:
  VirtualBaselineChannel(capture::Runtime& runtime, transport::LinkConfig up, transport::LinkConfig down);

  void open(const capture::CaptureConfig& config) override;
  void send(Bytes envelope) override;
  std::size_t drain(Micros) override { return 0; }
  void close() override { open_ = false; }
  capture::ChannelStats stats() const override { return stats_; }
  capture::Runtime& runtime() override { return runtime_; }

  std::uint64_t round_trips() const noexcept { return round_trips_; }

 private:
  void round_trip(std::size_t request_bytes);

  capture::Runtime& runtime_;
  transport::LinkEmulator up_;
  transport::LinkEmulator down_;
  capture::ChannelStats stats_;
  std::uint64_t round_trips_ = 0;
  bool open_ = false;
};

/// Accepts TCP connections and acknowledges every well-formed request.
class BaselineServer {
 public:
  explicit BaselineServer(const std::string& bind_address = "127.0.0.1:0");
  ~BaselineServer();

  std::string address() const { return address_; }
  void stop();

  std::uint64_t requests() const noexcept { return requests_; }
  /// Records decoded from the envelopes received so far.
  std::uint64_t records() const noexcept { return records_; }

 private:
  void accept_loop();
  void serve(int fd);

  int listen_fd_ = -1;
  std::string address_;
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> records_{0};
  std::mutex mu_;
  std::vector<int> conns_;
  std::vector<std::thread> workers_;
  std::thread acceptor_;
};

/// TCP client. With a shaped link config it paces itself: each request and
/// each acknowledgement is held back for the time the emulated link would
/// need to carry it.
class TcpBaselineChannel final : public capture::Channel {
 public:
  TcpBaselineChannel(std::string server, transport::LinkConfig up = {}, transport::LinkConfig down = {});
  ~TcpBaselineChannel() override;

  /// ConnectFailed when the server cannot be reached.
  void open(const capture::CaptureConfig& config) override;
  /// ConnectionLost when the stream breaks.
  void send(Bytes envelope) override;
  std::size_t drain(Micros) override { return 0; }
  void close() override;
  capture::ChannelStats stats() const override { return stats_; }
  capture::Runtime& runtime() override { return runtime_; }

 private:
  void pace(transport::LinkEmulator& link, std::size_t bytes);

  std::string server_;
  capture::RealRuntime runtime_;
  transport::LinkEmulator up_;
  transport::LinkEmulator down_;
  int fd_ = -1;
  capture::ChannelStats stats_;
};

}  // namespace edgeprov::bench
