// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// TCP transport for the framed protocol: a sequential prover daemon and the
// verifier-side channel.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>

#include "pac/device.hpp"
#include "pac/verify.hpp"

namespace pac::net {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

/// "host:port" or ":port"; kInvalidArgument otherwise.
Endpoint parse_endpoint(std::string_view text);

/// Serves one connection at a time, like the single MCU it stands in for.
/// Each ATTEST_REQUEST gets a MEASUREMENT_LOG; anything else gets an ERROR
/// and the connection is closed.
class ProverServer {
 public:
  /// Binds and listens immediately (kBindFailure). Port 0 picks a free port.
  ProverServer(device::DeviceState state, const Endpoint& endpoint);
  ~ProverServer();
  ProverServer(const ProverServer&) = delete;
  ProverServer& operator=(const ProverServer&) = delete;

  std::uint16_t port() const { return port_; }

  /// Runs until stop() is called.
  void serve();
  /// Accepts and handles exactly one connection.
  void serve_one();
  void stop() { stopping_ = true; }

 private:
  void handle(int fd);

  device::DeviceState state_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
};

class TcpProverChannel final : public verify::ProverChannel {
 public:
  TcpProverChannel(Endpoint endpoint, std::chrono::milliseconds timeout = std::chrono::seconds(10))
      : endpoint_(std::move(endpoint)), timeout_(timeout) {}

  /// kChannelTimeout when no complete answer arrives in time, kIo when the
  /// prover is unreachable, kProtocol when it answers with ERROR.
  measure::MeasurementLog request(std::optional<ByteView> nonce) override;

 private:
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

/// Sends raw bytes and returns whatever the peer sends back before closing
/// (or the timeout). Used by tests to speak malformed protocol.
Bytes raw_exchange(const Endpoint& endpoint, ByteView data, std::chrono::milliseconds timeout);

}  // namespace pac::net
