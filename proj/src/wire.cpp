// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include "pac/wire.hpp"

#include <json.hpp>

#include "pac/der.hpp"
#include "pac/error.hpp"

namespace pac::wire {

namespace {

using nlohmann::json;

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::kMalformedFrame, what); }

const json& field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const json& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_string()) malformed(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

Bytes hex_field(const json& obj, const char* key) {
  auto text = string_field(obj, key);
  try {
    return from_hex(text);
  } catch (const Error&) {
    malformed(std::string("field '") + key + "' is not hex");
  }
}

std::uint32_t read_length(const Bytes& b) {
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

}  // namespace

std::string_view to_string(MessageType type) {
  switch (type) {
    case MessageType::kAttestRequest:
      return "ATTEST_REQUEST";
    case MessageType::kMeasurementLog:
      return "MEASUREMENT_LOG";
    case MessageType::kError:
      return "ERROR";
  }
  return "?";
}

Message attest_request(std::optional<ByteView> nonce) {
  Message m;
  m.type = MessageType::kAttestRequest;
  if (nonce) m.nonce = Bytes(nonce->begin(), nonce->end());
  return m;
}

Message measurement_log(const measure::MeasurementLog& log) {
  Message m;
  m.type = MessageType::kMeasurementLog;
  m.nonce = log.nonce_echo;
  m.log = measure::render_log(log);
  m.ek_public = log.ek.ek_public;
  m.binding_sig = log.ek.binding_sig;
  m.quote_sig = log.ek.quote_sig;
  return m;
}

Message error_message(std::string code, std::string message) {
  Message m;
  m.type = MessageType::kError;
  m.error_code = std::move(code);
  m.error_message = std::move(message);
  return m;
}

measure::MeasurementLog to_measurement_log(const Message& message) {
  if (message.type != MessageType::kMeasurementLog) {
    malformed("expected MEASUREMENT_LOG, got " + std::string(to_string(message.type)));
  }
  measure::MeasurementLog log;
  try {
    log = measure::parse_measurement_log(message.log);
  } catch (const Error& e) {
    malformed(std::string("bad log text: ") + e.what());
  }
  if (log.ek.ek_public != message.ek_public || log.ek.binding_sig != message.binding_sig ||
      log.ek.quote_sig != message.quote_sig || log.nonce_echo != message.nonce) {
    malformed("EK fields disagree with the log text");
  }
  return log;
}

std::string encode_message(const Message& m) {
  json j;
  j["type"] = to_string(m.type);
  if (m.nonce) j["nonce"] = to_hex(*m.nonce);
  switch (m.type) {
    case MessageType::kAttestRequest:
      break;
    case MessageType::kMeasurementLog: {
      json body = {{"log", m.log}, {"ek_public", to_hex(m.ek_public)}, {"binding_sig", to_hex(m.binding_sig)}};
      if (m.quote_sig) body["quote_sig"] = to_hex(*m.quote_sig);
      j["body"] = std::move(body);
      break;
    }
    case MessageType::kError:
      j["body"] = {{"code", m.error_code}, {"message", m.error_message}};
      break;
  }
  return j.dump();
}

Message decode_message(std::string_view payload) {
  if (!der::is_valid_utf8(payload)) malformed("payload is not valid UTF-8");
  json j = json::parse(payload, nullptr, false);
  if (j.is_discarded()) malformed("payload is not JSON");
  if (!j.is_object()) malformed("payload must be a JSON object");

  Message m;
  auto type = string_field(j, "type");
  if (type == "ATTEST_REQUEST") {
    m.type = MessageType::kAttestRequest;
  } else if (type == "MEASUREMENT_LOG") {
    m.type = MessageType::kMeasurementLog;
  } else if (type == "ERROR") {
    m.type = MessageType::kError;
  } else {
    throw Error(Errc::kUnknownMessageType, "unknown message type '" + type + "'");
  }
  if (j.contains("nonce")) m.nonce = hex_field(j, "nonce");

  if (m.type == MessageType::kMeasurementLog) {
    const auto& body = field(j, "body");
    if (!body.is_object()) malformed("body must be an object");
    m.log = string_field(body, "log");
    m.ek_public = hex_field(body, "ek_public");
    m.binding_sig = hex_field(body, "binding_sig");
    if (body.contains("quote_sig")) m.quote_sig = hex_field(body, "quote_sig");
  } else if (m.type == MessageType::kError) {
    const auto& body = field(j, "body");
    if (!body.is_object()) malformed("body must be an object");
    m.error_code = string_field(body, "code");
    m.error_message = string_field(body, "message");
  }
  return m;
}

Bytes encode_frame(std::string_view payload) {
  if (payload.size() > kMaxPayload) {
    throw Error(Errc::kFrameTooLarge, std::to_string(payload.size()) + " bytes exceeds the 1 MiB frame limit");
  }
  Bytes out = be_bytes(payload.size(), kHeaderSize);
  append(out, as_bytes(payload));
  return out;
}

Bytes encode_frame(const Message& message) { return encode_frame(encode_message(message)); }

void FrameDecoder::feed(ByteView data) {
  append(buffer_, data);
  if (buffer_.size() >= kHeaderSize && read_length(buffer_) > kMaxPayload) {
    throw Error(Errc::kFrameTooLarge, "announced length " + std::to_string(read_length(buffer_)) +
                                          " exceeds the 1 MiB frame limit");
  }
}

std::optional<std::string> FrameDecoder::next() {
  if (buffer_.size() < kHeaderSize) return std::nullopt;
  const std::size_t length = read_length(buffer_);
  if (length > kMaxPayload) throw Error(Errc::kFrameTooLarge, "frame exceeds the 1 MiB limit");
  if (buffer_.size() < kHeaderSize + length) return std::nullopt;
  std::string payload(buffer_.begin() + kHeaderSize, buffer_.begin() + static_cast<std::ptrdiff_t>(kHeaderSize + length));
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(kHeaderSize + length));
  return payload;
}

}  // namespace pac::wire
