#pragma once

#include <random>
#include <string>
#include <vector>

#include "edgeprov/model.hpp"

namespace edgeprov::test {

// Workflow begin, task begin with input i1, task end with output o1 derived
// from i1, workflow end.
inline std::vector<CaptureRecord> training_run(const std::string& wf = "wf1") {
  return {
      CaptureRecord::workflow_begin(wf, 1000),
      CaptureRecord::task_begin(wf, "t1", {}, {{"i1", {}, {{"lr", 0.01}, {"epochs", std::int64_t{100}}}}}, 1001),
      CaptureRecord::task_end(wf, "t1", {{"o1", {"i1"}, {{"accuracy", 0.93}}}}, 1500),
      CaptureRecord::workflow_end(wf, 1600),
  };
}

class RandomRecords {
 public:
  explicit RandomRecords(std::uint64_t seed) : rng_(seed) {}

  std::string str(std::size_t max_len = 12) {
    static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789_-";
    std::string s(pick(max_len + 1), ' ');
    for (auto& c : s) c = alphabet[pick(sizeof alphabet - 1)];
    if (pick(8) == 0) s += "\xc3\xa9";  // some multi-byte UTF-8
    return s;
  }
  std::string id() {
    auto s = str(10);
    return s.empty() ? "x" : s;
  }

  Scalar scalar() {
    switch (pick(4)) {
      case 0: return str();
      case 1: return static_cast<std::int64_t>(rng_());
      case 2: return std::uniform_real_distribution<double>(-1e6, 1e6)(rng_);
      default: return pick(2) == 1;
    }
  }

  DataPayload data(std::size_t max_attrs = 8) {
    DataPayload d{id(), {}, {}};
    for (std::size_t i = pick(3); i > 0; --i) d.derivations.push_back(id());
    const auto n = pick(max_attrs + 1);
    for (std::size_t i = 0; i < n; ++i) d.attributes.push_back({"k" + std::to_string(i) + str(4), scalar()});
    return d;
  }

  CaptureRecord record(std::size_t max_attrs = 8) {
    const auto wf = id();
    const auto t = static_cast<std::int64_t>(rng_() >> 20);
    switch (pick(4)) {
      case 0: return CaptureRecord::workflow_begin(wf, t);
      case 1: return CaptureRecord::workflow_end(wf, t);
      case 2: {
        std::vector<std::string> deps;
        for (std::size_t i = pick(3); i > 0; --i) deps.push_back(id());
        std::vector<DataPayload> in;
        for (std::size_t i = pick(3); i > 0; --i) in.push_back(data(max_attrs));
        return CaptureRecord::task_begin(wf, id(), deps, in, t);
      }
      default: {
        std::vector<DataPayload> out;
        for (std::size_t i = pick(3); i > 0; --i) out.push_back(data(max_attrs));
        return CaptureRecord::task_end(wf, id(), out, t);
      }
    }
  }

  std::size_t pick(std::size_t n) { return n == 0 ? 0 : rng_() % n; }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace edgeprov::test
