#include "edgeprov/capture/io.hpp"

#include "edgeprov/error.hpp"

namespace edgeprov::capture {

UdpSessionIo::UdpSessionIo(transport::ClientConfig config, transport::Address broker)
    : client_(std::move(config), std::move(broker), clock_) {}

void UdpSessionIo::with_session(const std::function<void(transport::ClientSession&)>& fn) {
  client_.with_session(fn);
}

bool UdpSessionIo::wait_until(const std::function<bool(transport::ClientSession&)>& pred, Micros deadline) {
  return client_.wait_until(pred, deadline);
}

const Clock& Actor::clock() const { return owner_.world_.clock(); }

void Actor::sleep_for(Micros d) {
  if (d <= Micros{0}) return;
  pred_ = nullptr;
  wake_at_ = clock().now() + d;
  owner_.yield(*this);
}

void Actor::with_session(const std::function<void(transport::ClientSession&)>& fn) {
  if (!node_) throw Error(Errc::NotConnected, "actor has no session");
  fn(owner_.world_.client(*node_));
  owner_.world_.flush();
}

bool Actor::wait_until(const std::function<bool(transport::ClientSession&)>& pred, Micros deadline) {
  if (!node_) throw Error(Errc::NotConnected, "actor has no session");
  auto& session = owner_.world_.client(*node_);
  if (pred(session)) return true;
  if (clock().now() >= deadline) return false;
  pred_ = pred;
  wake_at_ = deadline;
  owner_.yield(*this);
  pred_ = nullptr;
  return pred(session);
}

SimScheduler::~SimScheduler() {
  {
    std::lock_guard lock(mu_);
    destroying_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
}

void SimScheduler::spawn(std::function<void(Actor&)> body, std::optional<std::size_t> node) {
  const auto index = actors_.size();
  actors_.push_back(std::unique_ptr<Actor>(new Actor(*this, index, node)));
  actors_.back()->wake_at_ = world_.now();
  bodies_.push_back(std::move(body));
}

void SimScheduler::yield(Actor& actor) {
  std::unique_lock lock(mu_);
  turn_ = kScheduler;
  cv_.notify_all();
  cv_.wait(lock, [&] { return turn_ == actor.index_ || destroying_; });
  if (abort_ || destroying_) throw Error(Errc::Timeout, "simulation stalled: no pending events and no deadline");
}

bool SimScheduler::runnable(Actor& actor) {
  if (actor.finished_) return false;
  if (abort_) return true;
  if (world_.now() >= actor.wake_at_) return true;
  return actor.pred_ && actor.node_ && actor.pred_(world_.client(*actor.node_));
}

void SimScheduler::run() {
  for (std::size_t i = threads_.size(); i < actors_.size(); ++i) {
    threads_.emplace_back([this, i] {
      auto& actor = *actors_[i];
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return turn_ == i || destroying_; });
      }
      try {
        if (destroying_) throw Error(Errc::Timeout, "simulation torn down");
        bodies_[i](actor);
      } catch (...) {
        actor.error_ = std::current_exception();
      }
      std::lock_guard lock(mu_);
      actor.finished_ = true;
      turn_ = kScheduler;
      cv_.notify_all();
    });
  }

  auto resume = [&](std::size_t i) {
    std::unique_lock lock(mu_);
    turn_ = i;
    cv_.notify_all();
    cv_.wait(lock, [&] { return turn_ == kScheduler; });
  };

  while (true) {
    bool all_done = true;
    bool ran = false;
    for (std::size_t i = 0; i < actors_.size(); ++i) {
      if (actors_[i]->finished_) continue;
      all_done = false;
      if (runnable(*actors_[i])) {
        resume(i);
        ran = true;
      }
    }
    if (all_done) break;
    if (ran) continue;

    Micros limit = kForever;
    for (auto& a : actors_) {
      if (!a->finished_) limit = std::min(limit, a->wake_at_);
    }
    if (!world_.step(limit)) {
      if (limit == kForever) {
        abort_ = true;  // every actor waits on a condition nothing can satisfy
        continue;
      }
      world_.clock().advance_to(limit);
      world_.flush();
    }
  }
  for (auto& t : threads_) t.join();
  threads_.clear();
  for (auto& a : actors_) {
    if (a->error_) std::rethrow_exception(a->error_);
  }
}

}  // namespace edgeprov::capture
