// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Minimal strict DER: definite lengths only, minimal length and integer
// encodings, single-byte tags, sorted SET OF. The Reader rejects anything a
// canonical encoder would not have produced, so decode(encode(x)) == x and
// encode(decode(b)) == b hold on the valid domain.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pac/bytes.hpp"

namespace pac::der {

namespace tag {
inline constexpr std::uint8_t kBoolean = 0x01;
inline constexpr std::uint8_t kInteger = 0x02;
inline constexpr std::uint8_t kBitString = 0x03;
inline constexpr std::uint8_t kOctetString = 0x04;
inline constexpr std::uint8_t kNull = 0x05;
inline constexpr std::uint8_t kOid = 0x06;
inline constexpr std::uint8_t kEnumerated = 0x0a;
inline constexpr std::uint8_t kUtf8String = 0x0c;
inline constexpr std::uint8_t kPrintableString = 0x13;
inline constexpr std::uint8_t kUtcTime = 0x17;
inline constexpr std::uint8_t kGeneralizedTime = 0x18;
inline constexpr std::uint8_t kSequence = 0x30;
inline constexpr std::uint8_t kSet = 0x31;

constexpr std::uint8_t context(unsigned number, bool constructed) {
  return static_cast<std::uint8_t>(0x80 | (constructed ? 0x20 : 0x00) | (number & 0x1f));
}
}  // namespace tag

class Writer {
 public:
  using Body = std::function<void(Writer&)>;

  Writer& boolean(bool value);
  Writer& integer(std::int64_t value);
  /// Non-negative integer from a big-endian magnitude of any width.
  Writer& unsigned_integer(ByteView magnitude);
  Writer& enumerated(std::int64_t value);
  Writer& bit_string(ByteView bits);
  Writer& octet_string(ByteView data);
  Writer& null();
  Writer& oid(std::string_view dotted);
  Writer& utf8(std::string_view text);
  /// UTCTime before 2050, GeneralizedTime from 2050 on (RFC 5280 rule).
  Writer& time(std::int64_t unix_seconds);
  Writer& generalized_time(std::int64_t unix_seconds);

  Writer& sequence(const Body& body);
  /// Elements are sorted by their encodings.
  Writer& set_of(std::vector<Bytes> elements);
  Writer& set_of(const Body& body);
  /// Constructed context tag wrapping the body (EXPLICIT tagging).
  Writer& explicit_tag(unsigned number, const Body& body);
  /// Primitive context tag with the given contents (IMPLICIT tagging).
  Writer& implicit_primitive(unsigned number, ByteView contents);
  Writer& tlv(std::uint8_t tag, ByteView contents);
  Writer& raw(ByteView encoded);

  const Bytes& bytes() const& { return out_; }
  Bytes bytes() && { return std::move(out_); }

 private:
  Bytes out_;
};

Bytes encode(const Writer::Body& body);

struct Tlv {
  std::uint8_t tag = 0;
  ByteView content;
  ByteView whole;
};

class Reader {
 public:
  explicit Reader(ByteView data) : data_(data) {}

  bool empty() const { return pos_ >= data_.size(); }
  /// Throws kDerTruncated when empty.
  std::uint8_t peek_tag() const;
  bool next_is(std::uint8_t tag) const { return !empty() && data_[pos_] == tag; }

  Tlv read_any();
  Tlv expect(std::uint8_t tag);

  Reader sequence();
  Reader explicit_tag(unsigned number);
  /// Elements of a SET OF, checked for canonical ordering.
  std::vector<Tlv> set_of();

  bool boolean();
  std::int64_t integer();
  /// Big-endian magnitude with no leading zero bytes (empty for zero).
  Bytes unsigned_integer();
  std::int64_t enumerated();
  Bytes bit_string();
  Bytes octet_string();
  void null();
  std::string oid();
  std::string utf8();
  std::int64_t time();
  std::int64_t generalized_time();

  /// Throws kDerTrailingBytes unless everything has been consumed.
  void finish() const;

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

// Content decoders shared with tests and the dumper.
std::string decode_oid(ByteView content);
Bytes encode_oid(std::string_view dotted);
bool is_valid_utf8(std::string_view text);

std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d);
std::string format_time(std::int64_t unix_seconds);  // "YYYY-MM-DDTHH:MM:SSZ"

/// Pretty-prints the TLV tree; name_of maps dotted OIDs to display names.
void dump(ByteView data, std::ostream& out,
          const std::function<std::string(const std::string&)>& name_of = {});

}  // namespace pac::der
