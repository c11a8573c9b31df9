#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgeprov {

enum class Errc {
  Malformed,
  StringTooLong,
  TooManyItems,
  UnknownTask,
  OrderViolation,
  InvalidGraph,
  Timeout,
  Rejected,
  RetryExhausted,
  NotConnected,
  ConnectFailed,
  WorkflowNotActive,
  TaskNotActive,
  FlushTimeout,
  SinkUnavailable,
  UnknownWorkflow,
  ConnectionLost,
  InvalidArgument,
  Io,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::Malformed: return "Malformed";
    case Errc::StringTooLong: return "StringTooLong";
    case Errc::TooManyItems: return "TooManyItems";
    case Errc::UnknownTask: return "UnknownTask";
    case Errc::OrderViolation: return "OrderViolation";
    case Errc::InvalidGraph: return "InvalidGraph";
    case Errc::Timeout: return "Timeout";
    case Errc::Rejected: return "Rejected";
    case Errc::RetryExhausted: return "RetryExhausted";
    case Errc::NotConnected: return "NotConnected";
    case Errc::ConnectFailed: return "ConnectFailed";
    case Errc::WorkflowNotActive: return "WorkflowNotActive";
    case Errc::TaskNotActive: return "TaskNotActive";
    case Errc::FlushTimeout: return "FlushTimeout";
    case Errc::SinkUnavailable: return "SinkUnavailable";
    case Errc::UnknownWorkflow: return "UnknownWorkflow";
    case Errc::ConnectionLost: return "ConnectionLost";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace edgeprov
