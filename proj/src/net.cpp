// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include "pac/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "pac/error.hpp"
#include "pac/wire.hpp"

namespace pac::net {

namespace {

using Clock = std::chrono::steady_clock;

class Socket {
 public:
  explicit Socket(int fd = -1) : fd_(fd) {}
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

void send_all(int fd, ByteView data) {
  std::size_t done = 0;
  while (done < data.size()) {
    auto n = ::send(fd, data.data() + done, data.size() - done, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::kIo, std::string("send failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

// Reads into `out`; returns false on orderly close. Throws kChannelTimeout
// once the deadline passes.
bool receive_some(int fd, Bytes& out, Clock::time_point deadline) {
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) throw Error(Errc::kChannelTimeout, "no answer from the prover in time");
    pollfd p{fd, POLLIN, 0};
    int r = ::poll(&p, 1, static_cast<int>(left));
    if (r < 0 && errno == EINTR) continue;
    if (r < 0) throw Error(Errc::kIo, std::string("poll failed: ") + std::strerror(errno));
    if (r == 0) continue;
    std::uint8_t buf[8192];
    auto n = ::recv(fd, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n < 0) throw Error(Errc::kIo, std::string("recv failed: ") + std::strerror(errno));
    if (n == 0) return false;
    out.assign(buf, buf + n);
    return true;
  }
}

Socket connect_to(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  auto port = std::to_string(ep.port);
  if (int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw Error(Errc::kIo, "cannot resolve " + ep.to_string() + ": " + ::gai_strerror(rc));
  }
  std::string last = "no addresses";
  for (auto* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (s.get() < 0) continue;
    if (::connect(s.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      return s;
    }
    last = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  throw Error(Errc::kIo, "cannot connect to " + ep.to_string() + ": " + last);
}

}  // namespace

Endpoint parse_endpoint(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos) {
    throw Error(Errc::kInvalidArgument, "endpoint '" + std::string(text) + "' must be host:port");
  }
  Endpoint ep;
  if (colon > 0) ep.host = std::string(text.substr(0, colon));
  auto port = text.substr(colon + 1);
  unsigned value = 0;
  if (port.empty() || port.size() > 5) throw Error(Errc::kInvalidArgument, "bad port in '" + std::string(text) + "'");
  for (char c : port) {
    if (c < '0' || c > '9') throw Error(Errc::kInvalidArgument, "bad port in '" + std::string(text) + "'");
    value = value * 10 + static_cast<unsigned>(c - '0');
  }
  if (value > 65535) throw Error(Errc::kInvalidArgument, "port out of range in '" + std::string(text) + "'");
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

ProverServer::ProverServer(device::DeviceState state, const Endpoint& endpoint) : state_(std::move(state)) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  auto port = std::to_string(endpoint.port);
  if (int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw Error(Errc::kBindFailure, "cannot resolve " + endpoint.to_string() + ": " + ::gai_strerror(rc));
  }
  std::string last = "no addresses";
  for (auto* ai = res; ai && listen_fd_ < 0; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 8) == 0) {
      listen_fd_ = fd;
    } else {
      last = std::strerror(errno);
      ::close(fd);
    }
  }
  ::freeaddrinfo(res);
  if (listen_fd_ < 0) throw Error(Errc::kBindFailure, "cannot bind " + endpoint.to_string() + ": " + last);

  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  if (addr.ss_family == AF_INET6) {
    port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
  } else {
    port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  }
}

ProverServer::~ProverServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void ProverServer::serve() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    int r = ::poll(&p, 1, 100);
    if (r > 0) serve_one();
  }
}

void ProverServer::serve_one() {
  int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) {
    if (errno == EINTR || errno == ECONNABORTED) return;
    throw Error(Errc::kIo, std::string("accept failed: ") + std::strerror(errno));
  }
  Socket conn(fd);
  try {
    handle(conn.get());
  } catch (const Error&) {
    // The peer went away mid-exchange; the next connection is unaffected.
  }
}

void ProverServer::handle(int fd) {
  wire::FrameDecoder decoder;
  Bytes chunk;
  auto fail = [&](const Error& e) {
    auto reply = wire::error_message(std::string(to_string(e.code())), e.what());
    send_all(fd, wire::encode_frame(reply));
  };
  for (;;) {
    // Idle connections are dropped after a minute so one client cannot
    // hold the single-threaded prover forever.
    if (!receive_some(fd, chunk, Clock::now() + std::chrono::seconds(60))) return;
    try {
      decoder.feed(chunk);
      while (auto payload = decoder.next()) {
        auto msg = wire::decode_message(*payload);
        if (msg.type != wire::MessageType::kAttestRequest) {
          throw Error(Errc::kProtocol, "prover only accepts ATTEST_REQUEST, got " +
                                           std::string(wire::to_string(msg.type)));
        }
        std::optional<ByteView> nonce;
        if (msg.nonce) nonce = ByteView(*msg.nonce);
        send_all(fd, wire::encode_frame(wire::measurement_log(measure::measure(state_, nonce))));
      }
    } catch (const Error& e) {
      if (e.code() == Errc::kIo) throw;
      fail(e);
      return;
    }
  }
}

measure::MeasurementLog TcpProverChannel::request(std::optional<ByteView> nonce) {
  const auto deadline = Clock::now() + timeout_;
  Socket s = connect_to(endpoint_);
  send_all(s.get(), wire::encode_frame(wire::attest_request(nonce)));
  wire::FrameDecoder decoder;
  Bytes chunk;
  for (;;) {
    if (!receive_some(s.get(), chunk, deadline)) {
      throw Error(Errc::kProtocol, "prover closed the connection without answering");
    }
    decoder.feed(chunk);
    if (auto payload = decoder.next()) {
      auto msg = wire::decode_message(*payload);
      if (msg.type == wire::MessageType::kError) {
        throw Error(Errc::kProtocol, "prover error " + msg.error_code + ": " + msg.error_message);
      }
      return wire::to_measurement_log(msg);
    }
  }
}

Bytes raw_exchange(const Endpoint& endpoint, ByteView data, std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  Socket s = connect_to(endpoint);
  send_all(s.get(), data);
  Bytes out, chunk;
  try {
    while (receive_some(s.get(), chunk, deadline)) append(out, chunk);
  } catch (const Error& e) {
    if (e.code() != Errc::kChannelTimeout) throw;
  }
  return out;
}

}  // namespace pac::net
