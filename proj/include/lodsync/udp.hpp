#pragma once

// Minimal POSIX UDP endpoint and socket wrappers for the real-socket
// binaries (IPv4 only).

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "lodsync/line_config.hpp"

namespace lodsync::net {

struct Endpoint {
  sockaddr_in addr{};

  static Endpoint parse(std::string_view text) {
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("endpoint must be host:port");
    std::string host(text.substr(0, colon));
    auto port = parse_int<std::uint16_t>(text.substr(colon + 1));
    if (!port) throw std::invalid_argument("bad port in '" + std::string(text) + "'");
    if (host.empty() || host == "localhost") host = "127.0.0.1";
    Endpoint e;
    e.addr.sin_family = AF_INET;
    e.addr.sin_port = htons(*port);
    if (inet_pton(AF_INET, host.c_str(), &e.addr.sin_addr) != 1) {
      throw std::invalid_argument("bad IPv4 address '" + host + "'");
    }
    return e;
  }

  std::uint16_t port() const noexcept { return ntohs(addr.sin_port); }

  std::string to_string() const {
    char buf[INET_ADDRSTRLEN] = {};
    inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof buf);
    return std::string(buf) + ":" + std::to_string(port());
  }

  friend bool operator==(const Endpoint& a, const Endpoint& b) noexcept {
    return a.addr.sin_addr.s_addr == b.addr.sin_addr.s_addr && a.addr.sin_port == b.addr.sin_port;
  }
};

class UdpSocket {
 public:
  UdpSocket() {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw std::system_error(errno, std::generic_category(), "socket");
    const int flags = ::fcntl(fd_, F_GETFL, 0);
    ::fcntl(fd_, F_SETFL, flags | O_NONBLOCK);
    int buf = 4 << 20;
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &buf, sizeof buf);
    ::setsockopt(fd_, SOL_SOCKET, SO_SNDBUF, &buf, sizeof buf);
  }
  ~UdpSocket() {
    if (fd_ >= 0) ::close(fd_);
  }
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;
  UdpSocket(UdpSocket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  UdpSocket& operator=(UdpSocket&& o) noexcept {
    if (this != &o) {
      if (fd_ >= 0) ::close(fd_);
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }

  /// Throws std::system_error (EADDRINUSE for port conflicts).
  void bind(const Endpoint& e) {
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&e.addr), sizeof e.addr) != 0) {
      throw std::system_error(errno, std::generic_category(), "bind " + e.to_string());
    }
  }

  Endpoint local() const {
    Endpoint e;
    socklen_t len = sizeof e.addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&e.addr), &len);
    return e;
  }

  /// Returns false if the kernel refused the datagram (buffer full).
  bool send_to(std::span<const std::uint8_t> bytes, const Endpoint& to) {
    const auto n = ::sendto(fd_, bytes.data(), bytes.size(), 0,
                            reinterpret_cast<const sockaddr*>(&to.addr), sizeof to.addr);
    return n == static_cast<ssize_t>(bytes.size());
  }

  /// Non-blocking receive into `buf`; nullopt when nothing is pending.
  std::optional<std::size_t> recv_from(std::vector<std::uint8_t>& buf, Endpoint& from) {
    buf.resize(2048);
    socklen_t len = sizeof from.addr;
    const auto n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from.addr), &len);
    if (n < 0) return std::nullopt;
    buf.resize(static_cast<std::size_t>(n));
    return static_cast<std::size_t>(n);
  }

  /// Blocks until readable or `timeout_ms` elapses.
  bool wait_readable(int timeout_ms) const {
    pollfd p{fd_, POLLIN, 0};
    return ::poll(&p, 1, timeout_ms) > 0;
  }

  int fd() const noexcept { return fd_; }

 private:
  int fd_ = -1;
};

/// Milliseconds since construction on the steady clock.
class MonoClock {
 public:
  MonoClock() : start_(std::chrono::steady_clock::now()) {}
  std::int64_t now_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_)
        .count();
  }
  std::int64_t now_us() const {
    return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start_)
        .count();
  }
  void reset() { start_ = std::chrono::steady_clock::now(); }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace lodsync::net
