#pragma once

// Execution environments for capture clients: real sockets and sleeps, or
// cooperative actors inside a simulated World on a virtual clock.

#include <condition_variable>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "edgeprov/clock.hpp"
#include "edgeprov/transport/client.hpp"
#include "edgeprov/transport/sim.hpp"
#include "edgeprov/transport/udp.hpp"

namespace edgeprov::capture {

/// Time source plus the ability to let time pass.
class Runtime {
 public:
  virtual ~Runtime() = default;
  virtual const Clock& clock() const = 0;
  virtual void sleep_for(Micros d) = 0;
  Micros now() const { return clock().now(); }
};

/// Access to one transport session. Implementations serialize access with
/// their I/O machinery; predicates must not mutate the session.
class SessionIo : public Runtime {
 public:
  virtual void with_session(const std::function<void(transport::ClientSession&)>& fn) = 0;
  virtual bool wait_until(const std::function<bool(transport::ClientSession&)>& pred, Micros deadline) = 0;
};

class RealRuntime final : public Runtime {
 public:
  const Clock& clock() const override { return clock_; }
  void sleep_for(Micros d) override { std::this_thread::sleep_for(d); }

 private:
  SteadyClock clock_;
};

class UdpSessionIo final : public SessionIo {
 public:
  UdpSessionIo(transport::ClientConfig config, transport::Address broker);

  const Clock& clock() const override { return clock_; }
  void sleep_for(Micros d) override { std::this_thread::sleep_for(d); }
  void with_session(const std::function<void(transport::ClientSession&)>& fn) override;
  bool wait_until(const std::function<bool(transport::ClientSession&)>& pred, Micros deadline) override;

 private:
  SteadyClock clock_;
  transport::UdpClient client_;
};

class SimScheduler;

/// One cooperative actor. Only one actor (or the scheduler) runs at a time;
/// blocking calls hand control back to the scheduler, which advances the
/// World until the actor can continue.
class Actor final : public SessionIo {
 public:
  const Clock& clock() const override;
  void sleep_for(Micros d) override;
  void with_session(const std::function<void(transport::ClientSession&)>& fn) override;
  bool wait_until(const std::function<bool(transport::ClientSession&)>& pred, Micros deadline) override;

  std::optional<std::size_t> node() const noexcept { return node_; }

 private:
  friend class SimScheduler;
  Actor(SimScheduler& owner, std::size_t index, std::optional<std::size_t> node)
      : owner_(owner), index_(index), node_(node) {}

  SimScheduler& owner_;
  std::size_t index_;
  std::optional<std::size_t> node_;  // World client index, if the actor owns a session
  std::function<bool(transport::ClientSession&)> pred_;
  Micros wake_at_ = kForever;
  bool finished_ = false;
  std::exception_ptr error_;
};

/// Runs actors to completion against a World, deterministically: runnable
/// actors resume in spawn order, and the World only advances when none is.
class SimScheduler {
 public:
  explicit SimScheduler(transport::World& world) : world_(world) {}
  ~SimScheduler();

  /// `node` binds the actor to a World client; without one the actor can
  /// only use Runtime calls.
  void spawn(std::function<void(Actor&)> body, std::optional<std::size_t> node = std::nullopt);

  /// Returns when every actor has finished. Rethrows the first actor failure.
  void run();

  transport::World& world() noexcept { return world_; }

 private:
  friend class Actor;
  static constexpr std::size_t kScheduler = static_cast<std::size_t>(-1);

  void yield(Actor& actor);
  bool runnable(Actor& actor);

  transport::World& world_;
  std::vector<std::unique_ptr<Actor>> actors_;
  std::vector<std::function<void(Actor&)>> bodies_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t turn_ = kScheduler;
  bool abort_ = false;
  bool destroying_ = false;
};

}  // namespace edgeprov::capture
