// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "pac/error.hpp"
#include "pac/net.hpp"
#include "pac/wire.hpp"
#include "support.hpp"

namespace pac::wire {
namespace {

using namespace std::chrono_literals;

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return Errc::kInvalidArgument;
}

std::vector<Message> sample_messages() {
  auto s = pac::testing::reference_device();
  return {attest_request(std::nullopt), attest_request(from_hex("0011")),
          measurement_log(measure::measure(s)), measurement_log(measure::measure(s, from_hex("abcdef"))),
          error_message("FrameTooLarge", "too big \xe2\x9c\x93")};
}

TEST(Frame, HeaderIsBigEndianLength) {
  auto f = encode_frame("{}");
  EXPECT_EQ(f, (Bytes{0, 0, 0, 2, '{', '}'}));
  EXPECT_EQ(code_of([] { encode_frame(std::string(kMaxPayload + 1, 'x')); }), Errc::kFrameTooLarge);
  EXPECT_NO_THROW(encode_frame(std::string(kMaxPayload, 'x')));
}

TEST(Frame, MessagesRoundTrip) {
  for (const auto& m : sample_messages()) {
    FrameDecoder d;
    d.feed(encode_frame(m));
    auto payload = d.next();
    ASSERT_TRUE(payload);
    EXPECT_EQ(decode_message(*payload), m);
    EXPECT_FALSE(d.next());
  }
}

TEST(Frame, ByteAtATimeAndConcatenated) {
  Bytes stream;
  auto msgs = sample_messages();
  for (const auto& m : msgs) append(stream, encode_frame(m));
  FrameDecoder d;
  std::vector<Message> out;
  for (auto b : stream) {
    d.feed(Bytes{b});
    while (auto p = d.next()) out.push_back(decode_message(*p));
  }
  EXPECT_EQ(out, msgs);
  EXPECT_EQ(d.buffered(), 0u);
}

TEST(Frame, OversizeHeaderRejectedEarly) {
  FrameDecoder d;
  EXPECT_EQ(code_of([&] { d.feed(be_bytes(kMaxPayload + 1, 4)); }), Errc::kFrameTooLarge);
}

TEST(Message, Rejections) {
  EXPECT_EQ(code_of([] { decode_message(R"({"type":"PING"})"); }), Errc::kUnknownMessageType);
  EXPECT_EQ(code_of([] { decode_message("not json"); }), Errc::kMalformedFrame);
  EXPECT_EQ(code_of([] { decode_message("[1]"); }), Errc::kMalformedFrame);
  EXPECT_EQ(code_of([] { decode_message(R"({"nonce":"00"})"); }), Errc::kMalformedFrame);
  EXPECT_EQ(code_of([] { decode_message(R"({"type":"ATTEST_REQUEST","nonce":"xyz"})"); }), Errc::kMalformedFrame);
  EXPECT_EQ(code_of([] { decode_message(R"({"type":"MEASUREMENT_LOG"})"); }), Errc::kMalformedFrame);
  EXPECT_EQ(code_of([] { decode_message("{\"type\":\"ERROR\",\"x\":\"\xff\"}"); }), Errc::kMalformedFrame);
}

TEST(Message, LogFieldsMustAgree) {
  auto s = pac::testing::reference_device();
  auto m = measurement_log(measure::measure(s, from_hex("01")));
  EXPECT_EQ(to_measurement_log(m), measure::measure(s, from_hex("01")));
  auto bad = m;
  bad.ek_public[5] ^= 1;
  EXPECT_EQ(code_of([&] { to_measurement_log(bad); }), Errc::kMalformedFrame);
  bad = m;
  bad.nonce = from_hex("02");
  EXPECT_EQ(code_of([&] { to_measurement_log(bad); }), Errc::kMalformedFrame);
}

TEST(Frame, FuzzedStreamsOnlyError) {
  std::mt19937_64 rng(2024);
  auto base = encode_frame(sample_messages()[3]);
  for (int i = 0; i < 5000; ++i) {
    Bytes b = base;
    for (int k = 0; k < 1 + static_cast<int>(rng() % 8); ++k) b[rng() % b.size()] = static_cast<std::uint8_t>(rng());
    if (rng() % 4 == 0) b.resize(rng() % b.size());
    FrameDecoder d;
    try {
      d.feed(b);
      while (auto p = d.next()) {
        auto m = decode_message(*p);
        if (m.type == MessageType::kMeasurementLog) to_measurement_log(m);
      }
    } catch (const Error&) {
    }
  }
}

// ---- TCP -------------------------------------------------------------------

struct RunningServer {
  net::ProverServer server;
  std::thread thread;

  explicit RunningServer(device::DeviceState s) : server(std::move(s), {"127.0.0.1", 0}) {
    thread = std::thread([this] { server.serve(); });
  }
  ~RunningServer() {
    server.stop();
    thread.join();
  }
  net::Endpoint endpoint() const { return {"127.0.0.1", server.port()}; }
};

Message read_reply(const Bytes& raw) {
  FrameDecoder d;
  d.feed(raw);
  auto p = d.next();
  if (!p) throw std::runtime_error("no complete frame in reply");
  return decode_message(*p);
}

TEST(Tcp, RequestReturnsTenEntries) {
  auto s = pac::testing::reference_device();
  RunningServer srv(s);
  net::TcpProverChannel ch(srv.endpoint(), 5s);
  auto log = ch.request(std::nullopt);
  EXPECT_EQ(log.entries.size(), 10u);
  EXPECT_EQ(log, measure::measure(s));
}

TEST(Tcp, NonceQuoteVerifies) {
  auto s = pac::testing::reference_device();
  RunningServer srv(s);
  net::TcpProverChannel ch(srv.endpoint(), 5s);
  auto nonce = from_hex("feedface");
  auto log = ch.request(nonce);
  ASSERT_TRUE(log.nonce_echo);
  EXPECT_EQ(*log.nonce_echo, nonce);
  EXPECT_TRUE(measure::verify_quote(log.ek, measure::entries_digest(log), nonce));
  EXPECT_EQ(log.ek.ek_public, s.secure_element->ek_public());
}

TEST(Tcp, OversizeFrameGetsErrorAndClose) {
  RunningServer srv(pac::testing::reference_device());
  auto reply = read_reply(net::raw_exchange(srv.endpoint(), be_bytes(kMaxPayload + 1, 4), 5s));
  EXPECT_EQ(reply.type, MessageType::kError);
  EXPECT_EQ(reply.error_code, "FrameTooLarge");
}

TEST(Tcp, MalformedAndUnexpectedMessages) {
  RunningServer srv(pac::testing::reference_device());
  auto r1 = read_reply(net::raw_exchange(srv.endpoint(), encode_frame("garbage"), 5s));
  EXPECT_EQ(r1.error_code, "MalformedFrame");
  auto r2 = read_reply(net::raw_exchange(srv.endpoint(), encode_frame(R"({"type":"HELLO"})"), 5s));
  EXPECT_EQ(r2.error_code, "UnknownMessageType");
  auto r3 = read_reply(net::raw_exchange(srv.endpoint(), encode_frame(error_message("x", "y")), 5s));
  EXPECT_EQ(r3.error_code, "Protocol");
  // The daemon keeps serving afterwards.
  net::TcpProverChannel ch(srv.endpoint(), 5s);
  EXPECT_EQ(ch.request(std::nullopt).entries.size(), 10u);
}

TEST(Tcp, SeveralRequestsOnOneConnection) {
  RunningServer srv(pac::testing::reference_device());
  Bytes two = encode_frame(attest_request(std::nullopt));
  append(two, encode_frame(attest_request(from_hex("01"))));
  auto raw = net::raw_exchange(srv.endpoint(), two, 500ms);
  FrameDecoder d;
  d.feed(raw);
  int replies = 0;
  while (auto p = d.next()) {
    EXPECT_EQ(decode_message(*p).type, MessageType::kMeasurementLog);
    ++replies;
  }
  EXPECT_EQ(replies, 2);
}

TEST(Tcp, TimeoutWhenProverIsStuck) {
  // Listening but never serving: the kernel accepts, nobody answers.
  net::ProverServer idle(pac::testing::reference_device(), {"127.0.0.1", 0});
  net::TcpProverChannel ch({"127.0.0.1", idle.port()}, 200ms);
  EXPECT_EQ(code_of([&] { ch.request(std::nullopt); }), Errc::kChannelTimeout);
}

TEST(Tcp, BindFailure) {
  net::ProverServer first(pac::testing::reference_device(), {"127.0.0.1", 0});
  EXPECT_EQ(code_of([&] { net::ProverServer(pac::testing::reference_device(), {"127.0.0.1", first.port()}); }),
            Errc::kBindFailure);
}

TEST(Tcp, EndpointParsing) {
  auto e = net::parse_endpoint("localhost:7070");
  EXPECT_EQ(e.host, "localhost");
  EXPECT_EQ(e.port, 7070);
  EXPECT_EQ(net::parse_endpoint(":0").host, "127.0.0.1");
  EXPECT_EQ(code_of([] { net::parse_endpoint("nohost"); }), Errc::kInvalidArgument);
  EXPECT_EQ(code_of([] { net::parse_endpoint("h:70000"); }), Errc::kInvalidArgument);
}

}  // namespace
}  // namespace pac::wire
