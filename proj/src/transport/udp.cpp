#include "edgeprov/transport/udp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "edgeprov/error.hpp"

namespace edgeprov::transport {

namespace {

sockaddr_in resolve(const Address& address) {
  auto [host, port] = split_host_port(address);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (host.empty() || host == "*") host = "0.0.0.0";
  if (host == "localhost") host = "127.0.0.1";
  if (inet_pton(AF_INET, host.c_str(), &sa.sin_addr) == 1) return sa;

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    throw Error(Errc::InvalidArgument, "cannot resolve host '" + host + "'");
  }
  sa.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return sa;
}

Address to_address(const sockaddr_in& sa) {
  char buf[INET_ADDRSTRLEN] = {};
  inet_ntop(AF_INET, &sa.sin_addr, buf, sizeof buf);
  return std::string(buf) + ":" + std::to_string(ntohs(sa.sin_port));
}

[[noreturn]] void fail(const std::string& what) { throw Error(Errc::Io, what + ": " + std::strerror(errno)); }

}  // namespace

std::pair<std::string, std::uint16_t> split_host_port(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::InvalidArgument, "expected host:port, got '" + address + "'");
  const auto port_text = address.substr(colon + 1);
  if (port_text.empty() || port_text.size() > 5 ||
      port_text.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(Errc::InvalidArgument, "bad port in '" + address + "'");
  }
  const auto port = std::stoul(port_text);
  if (port > 65535) throw Error(Errc::InvalidArgument, "port out of range in '" + address + "'");
  return {address.substr(0, colon), static_cast<std::uint16_t>(port)};
}

UdpSocket::UdpSocket(const std::string& bind_address) {
  const auto sa = resolve(bind_address);
  fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) fail("socket");
  int buf = 4 << 20;
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &buf, sizeof buf);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
    const int err = errno;
    ::close(fd_);
    errno = err;
    fail("bind " + bind_address);
  }
}

UdpSocket::~UdpSocket() {
  if (fd_ >= 0) ::close(fd_);
}

UdpSocket::UdpSocket(UdpSocket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

Address UdpSocket::local_address() const {
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len) != 0) fail("getsockname");
  return to_address(sa);
}

void UdpSocket::send_to(const Address& to, ByteView datagram) {
  const auto sa = resolve(to);
  // UDP gives no delivery promise; a failed send is just a lost datagram
  (void)::sendto(fd_, datagram.data(), datagram.size(), 0, reinterpret_cast<const sockaddr*>(&sa), sizeof sa);
}

std::optional<std::pair<Address, Bytes>> UdpSocket::receive(Micros timeout) {
  pollfd p{fd_, POLLIN, 0};
  const auto ms = std::max<std::int64_t>(0, (timeout.count() + 999) / 1000);
  const int ready = ::poll(&p, 1, static_cast<int>(std::min<std::int64_t>(ms, 1'000'000)));
  if (ready <= 0) return std::nullopt;
  Bytes buf(65536);
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  const auto n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&sa), &len);
  if (n < 0) return std::nullopt;
  buf.resize(static_cast<std::size_t>(n));
  return std::make_pair(to_address(sa), std::move(buf));
}

BrokerServer::BrokerServer(const std::string& bind_address, BrokerConfig config)
    : socket_(bind_address), address_(socket_.local_address()), broker_(std::move(config)) {
  thread_ = std::thread([this] { loop(); });
}

BrokerServer::~BrokerServer() { stop(); }

void BrokerServer::stop() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

void BrokerServer::inspect(const std::function<void(const Broker&)>& fn) {
  std::lock_guard lock(mu_);
  fn(broker_);
}

void BrokerServer::loop() {
  using namespace std::chrono_literals;
  while (!stop_) {
    Micros wait = 50ms;
    {
      std::lock_guard lock(mu_);
      if (auto d = broker_.next_deadline()) wait = std::clamp(*d - clock_.now(), Micros{0}, wait);
    }
    auto got = socket_.receive(wait);
    std::lock_guard lock(mu_);
    std::vector<Outgoing> out;
    if (got) out = broker_.handle_datagram(got->first, got->second, clock_.now());
    for (auto& o : out) socket_.send_to(o.to, o.datagram);
    for (auto& o : broker_.tick(clock_.now())) socket_.send_to(o.to, o.datagram);
  }
}

UdpClient::UdpClient(ClientConfig config, Address broker, const Clock& clock)
    : clock_(clock), broker_(to_address(resolve(broker))), socket_("0.0.0.0:0"), session_(std::move(config)) {
  thread_ = std::thread([this] { loop(); });
}

UdpClient::~UdpClient() { stop(); }

void UdpClient::stop() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

void UdpClient::flush_locked() {
  for (auto& d : session_.drain_outgoing()) socket_.send_to(broker_, d);
}

void UdpClient::with_session(const std::function<void(ClientSession&)>& fn) {
  std::lock_guard lock(mu_);
  fn(session_);
  flush_locked();
}

bool UdpClient::wait_until(const std::function<bool(ClientSession&)>& pred, Micros deadline) {
  std::unique_lock lock(mu_);
  while (!pred(session_)) {
    const auto now = clock_.now();
    if (now >= deadline) return false;
    // wake at least every 10 ms so deadlines are honoured without a notify
    cv_.wait_for(lock, std::min<Micros>(deadline - now, std::chrono::milliseconds(10)));
  }
  return true;
}

void UdpClient::loop() {
  using namespace std::chrono_literals;
  while (!stop_) {
    Micros wait = 20ms;
    {
      std::lock_guard lock(mu_);
      if (auto d = session_.next_deadline()) wait = std::clamp(*d - clock_.now(), Micros{0}, wait);
    }
    auto got = socket_.receive(wait);
    {
      std::lock_guard lock(mu_);
      if (got && got->first == broker_) session_.handle_datagram(got->second, clock_.now());
      if (auto d = session_.next_deadline(); d && *d <= clock_.now()) session_.tick(clock_.now());
      flush_locked();
    }
    cv_.notify_all();
  }
}

}  // namespace edgeprov::transport
