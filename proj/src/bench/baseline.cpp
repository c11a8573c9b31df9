#include "edgeprov/bench/baseline.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "edgeprov/error.hpp"
#include "edgeprov/transport/udp.hpp"
#include "edgeprov/wire/envelope.hpp"

namespace edgeprov::bench {

namespace {

// A byte stream does its own recovery, so only bandwidth and delay remain.
transport::LinkConfig reliable(transport::LinkConfig c) {
  c.loss_prob = c.dup_prob = c.reorder_prob = 0.0;
  return c;
}

bool write_all(int fd, const std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const auto w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) return false;
    p += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

bool read_all(int fd, std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const auto r = ::recv(fd, p, n, 0);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return false;
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

sockaddr_in resolve(const std::string& address) {
  auto [host, port] = transport::split_host_port(address);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    throw Error(Errc::InvalidArgument, "cannot resolve " + host);
  }
  sockaddr_in sa;
  std::memcpy(&sa, res->ai_addr, sizeof sa);
  ::freeaddrinfo(res);
  sa.sin_port = htons(port);
  return sa;
}

Bytes request(ByteView envelope) {
  Bytes out;
  ByteWriter w(out);
  w.u32(static_cast<std::uint32_t>(envelope.size()));
  w.raw(envelope);
  return out;
}

}  // namespace

VirtualBaselineChannel::VirtualBaselineChannel(capture::Runtime& runtime, transport::LinkConfig up,
                                               transport::LinkConfig down)
    : runtime_(runtime), up_(reliable(up)), down_(reliable(down)) {}

void VirtualBaselineChannel::round_trip(std::size_t request_bytes) {
  const auto sent = runtime_.now();
  const auto arrived = up_.transmit(Bytes(request_bytes), sent).front().deliver_at;
  const auto acked = down_.transmit(Bytes(kAckBytes), arrived).front().deliver_at;
  stats_.bytes_on_wire += request_bytes + kAckBytes;
  ++round_trips_;
  runtime_.sleep_for(acked - sent);
}

void VirtualBaselineChannel::open(const capture::CaptureConfig&) {
  round_trip(kRequestHeaderBytes);
  open_ = true;
}

void VirtualBaselineChannel::send(Bytes envelope) {
  if (!open_) throw Error(Errc::NotConnected, "baseline channel is not open");
  round_trip(kRequestHeaderBytes + envelope.size());
}

BaselineServer::BaselineServer(const std::string& bind_address) {
  const auto sa = resolve(bind_address);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw Error(Errc::Io, std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0 || ::listen(listen_fd_, 128) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw Error(Errc::Io, "cannot listen on " + bind_address + ": " + why);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  char host[INET_ADDRSTRLEN];
  ::inet_ntop(AF_INET, &bound.sin_addr, host, sizeof host);
  address_ = std::string(host) + ":" + std::to_string(ntohs(bound.sin_port));
  acceptor_ = std::thread([this] { accept_loop(); });
}

BaselineServer::~BaselineServer() { stop(); }

void BaselineServer::stop() {
  if (stop_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard lock(mu_);
    for (int fd : conns_) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : workers_) t.join();
  ::close(listen_fd_);
}

void BaselineServer::accept_loop() {
  while (!stop_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 50) <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(mu_);
    conns_.push_back(fd);
    workers_.emplace_back([this, fd] { serve(fd); });
  }
}

void BaselineServer::serve(int fd) {
  while (!stop_) {
    std::uint8_t header[kRequestHeaderBytes];
    if (!read_all(fd, header, sizeof header)) break;
    const std::uint32_t n = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                            (std::uint32_t{header[2]} << 8) | header[3];
    Bytes body(n);
    if (n > 0 && !read_all(fd, body.data(), n)) break;
    std::uint8_t ack = 0x00;
    if (n > 0) {
      try {
        records_ += wire::open_envelope(body).size();
      } catch (const Error&) {
        ack = 0x01;
      }
    }
    ++requests_;
    if (!write_all(fd, &ack, 1)) break;
  }
  std::lock_guard lock(mu_);
  conns_.erase(std::remove(conns_.begin(), conns_.end(), fd), conns_.end());
  ::close(fd);
}

TcpBaselineChannel::TcpBaselineChannel(std::string server, transport::LinkConfig up, transport::LinkConfig down)
    : server_(std::move(server)), up_(reliable(up)), down_(reliable(down)) {}

TcpBaselineChannel::~TcpBaselineChannel() { close(); }

void TcpBaselineChannel::pace(transport::LinkEmulator& link, std::size_t bytes) {
  const auto now = runtime_.now();
  const auto at = link.transmit(Bytes(bytes), now).front().deliver_at;
  if (at > now) runtime_.sleep_for(at - now);
}

void TcpBaselineChannel::open(const capture::CaptureConfig&) {
  const auto sa = resolve(server_);
  fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw Error(Errc::ConnectFailed, std::string("socket: ") + std::strerror(errno));
  if (::connect(fd_, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw Error(Errc::ConnectFailed, "cannot connect to " + server_ + ": " + why);
  }
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  // the handshake, as an empty request
  pace(up_, kRequestHeaderBytes);
  pace(down_, kAckBytes);
  stats_.bytes_on_wire += kRequestHeaderBytes + kAckBytes;
}

void TcpBaselineChannel::send(Bytes envelope) {
  if (fd_ < 0) throw Error(Errc::NotConnected, "baseline channel is not open");
  const auto req = request(envelope);
  pace(up_, req.size());
  std::uint8_t ack = 0;
  if (!write_all(fd_, req.data(), req.size()) || !read_all(fd_, &ack, 1)) {
    throw Error(Errc::ConnectionLost, "baseline server " + server_ + " closed the stream");
  }
  pace(down_, kAckBytes);
  stats_.bytes_on_wire += req.size() + kAckBytes;
  if (ack != 0) throw Error(Errc::Rejected, "baseline server rejected an envelope");
}

void TcpBaselineChannel::close() {
  if (fd_ < 0) return;
  ::close(fd_);
  fd_ = -1;
}

}  // namespace edgeprov::bench
