// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Prover/verifier framing: a 4-byte big-endian payload length followed by a
// UTF-8 JSON message. See docs/wire-protocol.md for the message schema.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "pac/bytes.hpp"
#include "pac/measure.hpp"

namespace pac::wire {

inline constexpr std::size_t kMaxPayload = 1u << 20;
inline constexpr std::size_t kHeaderSize = 4;

enum class MessageType { kAttestRequest, kMeasurementLog, kError };

std::string_view to_string(MessageType type);

struct Message {
  MessageType type = MessageType::kAttestRequest;
  std::optional<Bytes> nonce;

  // MEASUREMENT_LOG body
  std::string log;
  Bytes ek_public;
  Bytes binding_sig;
  std::optional<Bytes> quote_sig;

  // ERROR body
  std::string error_code;
  std::string error_message;

  friend bool operator==(const Message&, const Message&) = default;
};

Message attest_request(std::optional<ByteView> nonce);
Message measurement_log(const measure::MeasurementLog& log);
Message error_message(std::string code, std::string message);

/// Parses the log text and checks it against the EK fields and nonce.
/// kMalformedFrame on any disagreement.
measure::MeasurementLog to_measurement_log(const Message& message);

std::string encode_message(const Message& message);
/// kMalformedFrame for invalid UTF-8/JSON or missing fields,
/// kUnknownMessageType for an unrecognised type.
Message decode_message(std::string_view payload);

/// kFrameTooLarge above kMaxPayload.
Bytes encode_frame(std::string_view payload);
Bytes encode_frame(const Message& message);

/// Incremental decoder for a byte stream. Rejects an oversize length as soon
/// as the header arrives, without buffering the body.
class FrameDecoder {
 public:
  void feed(ByteView data);
  /// Next complete payload, if any.
  std::optional<std::string> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  Bytes buffer_;
};

}  // namespace pac::wire
