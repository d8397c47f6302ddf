// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include "pac/der.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <ostream>

#include "pac/error.hpp"

namespace pac::der {

namespace {

void put_length(Bytes& out, std::size_t len) {
  if (len < 0x80) {
    out.push_back(static_cast<std::uint8_t>(len));
    return;
  }
  std::uint8_t buf[8];
  int n = 0;
  while (len > 0) {
    buf[n++] = static_cast<std::uint8_t>(len & 0xff);
    len >>= 8;
  }
  out.push_back(static_cast<std::uint8_t>(0x80 | n));
  while (n > 0) out.push_back(buf[--n]);
}

[[noreturn]] void fail(Errc code, const std::string& what) { throw Error(code, what); }

struct Civil {
  std::int64_t year;
  unsigned month, day, hour, minute, second;
};

Civil civil_from_unix(std::int64_t t) {
  std::int64_t days = t / 86400;
  std::int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  // Howard Hinnant's civil_from_days.
  days += 719468;
  const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const auto doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2 ? 1 : 0);
  return {y, m, d, static_cast<unsigned>(rem / 3600), static_cast<unsigned>(rem % 3600 / 60),
          static_cast<unsigned>(rem % 60)};
}

std::string time_string(std::int64_t t, bool generalized) {
  Civil c = civil_from_unix(t);
  char buf[32];
  if (generalized) {
    std::snprintf(buf, sizeof buf, "%04lld%02u%02u%02u%02u%02uZ", static_cast<long long>(c.year),
                  c.month, c.day, c.hour, c.minute, c.second);
  } else {
    std::snprintf(buf, sizeof buf, "%02lld%02u%02u%02u%02u%02uZ",
                  static_cast<long long>(c.year % 100), c.month, c.day, c.hour, c.minute, c.second);
  }
  return buf;
}

bool utc_time_range(std::int64_t t) {
  auto y = civil_from_unix(t).year;
  return y >= 1950 && y <= 2049;
}

unsigned digits(std::string_view s, std::size_t pos, std::size_t n) {
  unsigned v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') fail(Errc::kDerMalformed, "bad digit in time");
    v = v * 10 + static_cast<unsigned>(s[i] - '0');
  }
  return v;
}

std::int64_t parse_time(ByteView content, bool generalized) {
  std::string_view s(reinterpret_cast<const char*>(content.data()), content.size());
  const std::size_t ylen = generalized ? 4 : 2;
  if (s.size() != ylen + 11 || s.back() != 'Z') fail(Errc::kDerMalformed, "bad time format");
  std::int64_t year = digits(s, 0, ylen);
  if (!generalized) year += year < 50 ? 2000 : 1900;
  unsigned month = digits(s, ylen, 2), day = digits(s, ylen + 2, 2);
  unsigned hour = digits(s, ylen + 4, 2), minute = digits(s, ylen + 6, 2),
           second = digits(s, ylen + 8, 2);
  if (month < 1 || month > 12 || day < 1 || hour > 23 || minute > 59 || second > 59) {
    fail(Errc::kDerMalformed, "time field out of range");
  }
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  unsigned max_day = kDays[month - 1] + ((month == 2 && leap) ? 1 : 0);
  if (day > max_day) fail(Errc::kDerMalformed, "day out of range");
  return days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second;
}

}  // namespace

std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2 ? 1 : 0;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::string format_time(std::int64_t unix_seconds) {
  Civil c = civil_from_unix(unix_seconds);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02u:%02u:%02uZ",
                static_cast<long long>(c.year), c.month, c.day, c.hour, c.minute, c.second);
  return buf;
}

Bytes encode_oid(std::string_view dotted) {
  std::size_t start = 0;
  std::vector<std::string> parts;
  while (start <= dotted.size()) {
    auto dot = dotted.find('.', start);
    if (dot == std::string_view::npos) dot = dotted.size();
    parts.emplace_back(dotted.substr(start, dot - start));
    start = dot + 1;
  }
  if (parts.size() < 2) throw Error(Errc::kInvalidArgument, "OID needs two arcs");

  // Arbitrary-precision base-128 from a decimal string.
  auto base128 = [](std::string dec) {
    if (dec.empty() || dec.find_first_not_of("0123456789") != std::string::npos ||
        (dec.size() > 1 && dec[0] == '0')) {
      throw Error(Errc::kInvalidArgument, "bad OID arc");
    }
    Bytes groups;  // little-endian 7-bit groups
    while (!(dec.size() == 1 && dec[0] == '0')) {
      std::string quotient;
      unsigned rem = 0;
      for (char ch : dec) {
        unsigned cur = rem * 10 + static_cast<unsigned>(ch - '0');
        if (!quotient.empty() || cur / 128 != 0) quotient.push_back(static_cast<char>('0' + cur / 128));
        rem = cur % 128;
      }
      groups.push_back(static_cast<std::uint8_t>(rem));
      dec = quotient.empty() ? "0" : quotient;
    }
    if (groups.empty()) groups.push_back(0);
    Bytes out;
    for (std::size_t i = groups.size(); i-- > 0;) {
      out.push_back(static_cast<std::uint8_t>(groups[i] | (i ? 0x80 : 0)));
    }
    return out;
  };

  unsigned first = 0;
  if (parts[0] == "0") first = 0;
  else if (parts[0] == "1") first = 1;
  else if (parts[0] == "2") first = 2;
  else throw Error(Errc::kInvalidArgument, "bad first OID arc");

  Bytes out;
  // First two arcs combine to 40 * a + b; only arc 2 may have b >= 40.
  {
    std::string second = parts[1];
    if (first < 2) {
      std::uint64_t b = 0;
      auto r = std::from_chars(second.data(), second.data() + second.size(), b);
      if (r.ec != std::errc() || b >= 40) throw Error(Errc::kInvalidArgument, "bad second OID arc");
      append(out, base128(std::to_string(first * 40 + b)));
    } else {
      // 80 + b as a decimal string.
      std::string sum = second;
      int carry = 80;
      for (std::size_t i = sum.size(); i-- > 0 && carry;) {
        int v = (sum[i] - '0') + carry % 10;
        carry /= 10;
        if (v >= 10) { v -= 10; ++carry; }
        sum[i] = static_cast<char>('0' + v);
      }
      if (carry) sum.insert(sum.begin(), static_cast<char>('0' + carry));
      append(out, base128(sum));
    }
  }
  for (std::size_t i = 2; i < parts.size(); ++i) append(out, base128(parts[i]));
  return out;
}

std::string decode_oid(ByteView content) {
  if (content.empty()) fail(Errc::kDerMalformed, "empty OID");
  std::vector<std::string> arcs;
  std::size_t i = 0;
  while (i < content.size()) {
    if (content[i] == 0x80) fail(Errc::kDerMalformed, "non-minimal OID arc");
    // Decimal accumulator for arbitrarily wide arcs.
    std::string dec = "0";
    bool done = false;
    while (i < content.size()) {
      std::uint8_t b = content[i++];
      int carry = b & 0x7f;
      for (std::size_t k = dec.size(); k-- > 0;) {
        int v = (dec[k] - '0') * 128 + carry;
        dec[k] = static_cast<char>('0' + v % 10);
        carry = v / 10;
      }
      while (carry) {
        dec.insert(dec.begin(), static_cast<char>('0' + carry % 10));
        carry /= 10;
      }
      if (!(b & 0x80)) {
        done = true;
        break;
      }
    }
    if (!done) fail(Errc::kDerMalformed, "truncated OID arc");
    auto nz = dec.find_first_not_of('0');
    arcs.push_back(nz == std::string::npos ? "0" : dec.substr(nz));
  }
  // Split the first subidentifier.
  std::string first = arcs.front();
  std::string head, second;
  if (first.size() <= 18) {
    std::uint64_t v = std::stoull(first);
    if (v < 40) { head = "0"; second = std::to_string(v); }
    else if (v < 80) { head = "1"; second = std::to_string(v - 40); }
    else { head = "2"; second = std::to_string(v - 80); }
  } else {
    head = "2";
    std::string s = first;
    int borrow = 80;
    for (std::size_t k = s.size(); k-- > 0 && borrow;) {
      int v = (s[k] - '0') - borrow % 10;
      borrow /= 10;
      if (v < 0) { v += 10; ++borrow; }
      s[k] = static_cast<char>('0' + v);
    }
    auto nz = s.find_first_not_of('0');
    second = nz == std::string::npos ? "0" : s.substr(nz);
  }
  std::string out = head + "." + second;
  for (std::size_t k = 1; k < arcs.size(); ++k) out += "." + arcs[k];
  return out;
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    std::size_t n;
    std::uint32_t cp;
    if (c < 0x80) { ++i; continue; }
    if ((c & 0xe0) == 0xc0) { n = 1; cp = c & 0x1f; }
    else if ((c & 0xf0) == 0xe0) { n = 2; cp = c & 0x0f; }
    else if ((c & 0xf8) == 0xf0) { n = 3; cp = c & 0x07; }
    else return false;
    if (i + n >= text.size()) return false;
    for (std::size_t k = 1; k <= n; ++k) {
      auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    if ((n == 1 && cp < 0x80) || (n == 2 && cp < 0x800) || (n == 3 && cp < 0x10000) ||
        cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) {
      return false;
    }
    i += n + 1;
  }
  return true;
}

// ---------------------------------------------------------------- Writer

Writer& Writer::tlv(std::uint8_t t, ByteView contents) {
  out_.push_back(t);
  put_length(out_, contents.size());
  append(out_, contents);
  return *this;
}

Writer& Writer::raw(ByteView encoded) {
  append(out_, encoded);
  return *this;
}

Writer& Writer::boolean(bool value) {
  const std::uint8_t v = value ? 0xff : 0x00;
  return tlv(tag::kBoolean, ByteView(&v, 1));
}

namespace {
Bytes twos_complement(std::int64_t value) {
  Bytes b = be_bytes(static_cast<std::uint64_t>(value), 8);
  std::size_t i = 0;
  while (i + 1 < b.size() && ((b[i] == 0x00 && !(b[i + 1] & 0x80)) ||
                              (b[i] == 0xff && (b[i + 1] & 0x80)))) {
    ++i;
  }
  return Bytes(b.begin() + static_cast<std::ptrdiff_t>(i), b.end());
}
}  // namespace

Writer& Writer::integer(std::int64_t value) { return tlv(tag::kInteger, twos_complement(value)); }

Writer& Writer::enumerated(std::int64_t value) {
  return tlv(tag::kEnumerated, twos_complement(value));
}

Writer& Writer::unsigned_integer(ByteView magnitude) {
  std::size_t i = 0;
  while (i < magnitude.size() && magnitude[i] == 0) ++i;
  Bytes content;
  if (i == magnitude.size() || (magnitude[i] & 0x80)) content.push_back(0);
  content.insert(content.end(), magnitude.begin() + static_cast<std::ptrdiff_t>(i), magnitude.end());
  return tlv(tag::kInteger, content);
}

Writer& Writer::bit_string(ByteView bits) {
  Bytes content;
  content.reserve(bits.size() + 1);
  content.push_back(0);
  append(content, bits);
  return tlv(tag::kBitString, content);
}

Writer& Writer::octet_string(ByteView data) { return tlv(tag::kOctetString, data); }

Writer& Writer::null() { return tlv(tag::kNull, {}); }

Writer& Writer::oid(std::string_view dotted) { return tlv(tag::kOid, encode_oid(dotted)); }

Writer& Writer::utf8(std::string_view text) {
  if (!is_valid_utf8(text)) throw Error(Errc::kInvalidArgument, "text is not valid UTF-8");
  return tlv(tag::kUtf8String, as_bytes(text));
}

Writer& Writer::time(std::int64_t unix_seconds) {
  if (!utc_time_range(unix_seconds)) return generalized_time(unix_seconds);
  return tlv(tag::kUtcTime, as_bytes(time_string(unix_seconds, false)));
}

Writer& Writer::generalized_time(std::int64_t unix_seconds) {
  return tlv(tag::kGeneralizedTime, as_bytes(time_string(unix_seconds, true)));
}

Writer& Writer::sequence(const Body& body) {
  Writer inner;
  body(inner);
  return tlv(tag::kSequence, inner.out_);
}

Writer& Writer::set_of(std::vector<Bytes> elements) {
  std::sort(elements.begin(), elements.end());
  Bytes content;
  for (const auto& e : elements) append(content, e);
  return tlv(tag::kSet, content);
}

Writer& Writer::set_of(const Body& body) {
  Writer inner;
  body(inner);
  Reader r(inner.out_);
  std::vector<Bytes> elements;
  while (!r.empty()) {
    auto t = r.read_any();
    elements.emplace_back(t.whole.begin(), t.whole.end());
  }
  return set_of(std::move(elements));
}

Writer& Writer::explicit_tag(unsigned number, const Body& body) {
  Writer inner;
  body(inner);
  return tlv(tag::context(number, true), inner.out_);
}

Writer& Writer::implicit_primitive(unsigned number, ByteView contents) {
  return tlv(tag::context(number, false), contents);
}

Bytes encode(const Writer::Body& body) {
  Writer w;
  body(w);
  return std::move(w).bytes();
}

// ---------------------------------------------------------------- Reader

std::uint8_t Reader::peek_tag() const {
  if (empty()) fail(Errc::kDerTruncated, "expected another element");
  return data_[pos_];
}

Tlv Reader::read_any() {
  const std::size_t start = pos_;
  if (empty()) fail(Errc::kDerTruncated, "expected another element");
  const std::uint8_t t = data_[pos_++];
  if ((t & 0x1f) == 0x1f) fail(Errc::kDerBadTag, "multi-byte tags are not supported");
  if (pos_ >= data_.size()) fail(Errc::kDerTruncated, "missing length");
  std::uint8_t first = data_[pos_++];
  std::size_t len = 0;
  if (first < 0x80) {
    len = first;
  } else if (first == 0x80) {
    fail(Errc::kDerMalformed, "indefinite length");
  } else {
    const std::size_t n = first & 0x7f;
    if (n > 4) fail(Errc::kDerMalformed, "length too wide");
    if (data_.size() - pos_ < n) fail(Errc::kDerTruncated, "truncated length");
    if (data_[pos_] == 0) fail(Errc::kDerNonMinimalLength, "leading zero in length");
    for (std::size_t i = 0; i < n; ++i) len = (len << 8) | data_[pos_++];
    if (len < 0x80) fail(Errc::kDerNonMinimalLength, "long form for short length");
  }
  if (data_.size() - pos_ < len) fail(Errc::kDerTruncated, "content runs past end of input");
  Tlv out;
  out.tag = t;
  out.content = data_.subspan(pos_, len);
  pos_ += len;
  out.whole = data_.subspan(start, pos_ - start);
  return out;
}

Tlv Reader::expect(std::uint8_t t) {
  if (empty()) fail(Errc::kDerTruncated, "expected another element");
  if (data_[pos_] != t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "expected tag 0x%02x, found 0x%02x", t, data_[pos_]);
    fail(Errc::kDerBadTag, buf);
  }
  return read_any();
}

Reader Reader::sequence() { return Reader(expect(tag::kSequence).content); }

Reader Reader::explicit_tag(unsigned number) {
  return Reader(expect(tag::context(number, true)).content);
}

std::vector<Tlv> Reader::set_of() {
  Reader inner(expect(tag::kSet).content);
  std::vector<Tlv> out;
  while (!inner.empty()) {
    auto t = inner.read_any();
    if (!out.empty() && !std::lexicographical_compare(out.back().whole.begin(), out.back().whole.end(),
                                                      t.whole.begin(), t.whole.end())) {
      if (!std::equal(out.back().whole.begin(), out.back().whole.end(), t.whole.begin(),
                      t.whole.end())) {
        fail(Errc::kDerMalformed, "SET OF elements not in canonical order");
      }
    }
    out.push_back(t);
  }
  return out;
}

bool Reader::boolean() {
  auto t = expect(tag::kBoolean);
  if (t.content.size() != 1) fail(Errc::kDerMalformed, "BOOLEAN must be one byte");
  if (t.content[0] == 0xff) return true;
  if (t.content[0] == 0x00) return false;
  fail(Errc::kDerMalformed, "BOOLEAN must be 0x00 or 0xff");
}

namespace {
void check_minimal_integer(ByteView c) {
  if (c.empty()) fail(Errc::kDerMalformed, "empty INTEGER");
  if (c.size() > 1 && ((c[0] == 0x00 && !(c[1] & 0x80)) || (c[0] == 0xff && (c[1] & 0x80)))) {
    fail(Errc::kDerMalformed, "non-minimal INTEGER");
  }
}

std::int64_t small_int(ByteView c) {
  check_minimal_integer(c);
  if (c.size() > 8) fail(Errc::kDerMalformed, "INTEGER too large");
  std::uint64_t v = (c[0] & 0x80) ? ~std::uint64_t{0} : 0;
  for (auto b : c) v = (v << 8) | b;
  return static_cast<std::int64_t>(v);
}
}  // namespace

std::int64_t Reader::integer() { return small_int(expect(tag::kInteger).content); }

std::int64_t Reader::enumerated() { return small_int(expect(tag::kEnumerated).content); }

Bytes Reader::unsigned_integer() {
  auto c = expect(tag::kInteger).content;
  check_minimal_integer(c);
  if (c[0] & 0x80) fail(Errc::kDerMalformed, "negative INTEGER where unsigned expected");
  std::size_t i = 0;
  while (i < c.size() && c[i] == 0) ++i;
  return Bytes(c.begin() + static_cast<std::ptrdiff_t>(i), c.end());
}

Bytes Reader::bit_string() {
  auto c = expect(tag::kBitString).content;
  if (c.empty()) fail(Errc::kDerMalformed, "empty BIT STRING");
  if (c[0] != 0) fail(Errc::kDerMalformed, "BIT STRING with unused bits");
  return Bytes(c.begin() + 1, c.end());
}

Bytes Reader::octet_string() {
  auto c = expect(tag::kOctetString).content;
  return Bytes(c.begin(), c.end());
}

void Reader::null() {
  if (!expect(tag::kNull).content.empty()) fail(Errc::kDerMalformed, "NULL with content");
}

std::string Reader::oid() { return decode_oid(expect(tag::kOid).content); }

std::string Reader::utf8() {
  auto c = expect(tag::kUtf8String).content;
  std::string s(reinterpret_cast<const char*>(c.data()), c.size());
  if (!is_valid_utf8(s)) fail(Errc::kDerMalformed, "invalid UTF-8");
  return s;
}

std::int64_t Reader::time() {
  if (next_is(tag::kUtcTime)) {
    auto t = parse_time(expect(tag::kUtcTime).content, false);
    return t;
  }
  auto t = parse_time(expect(tag::kGeneralizedTime).content, true);
  if (utc_time_range(t)) fail(Errc::kDerMalformed, "GeneralizedTime used where UTCTime is required");
  return t;
}

std::int64_t Reader::generalized_time() {
  return parse_time(expect(tag::kGeneralizedTime).content, true);
}

void Reader::finish() const {
  if (!empty()) fail(Errc::kDerTrailingBytes, std::to_string(data_.size() - pos_) + " trailing bytes");
}

// ---------------------------------------------------------------- dump

namespace {

std::string tag_name(std::uint8_t t) {
  switch (t) {
    case tag::kBoolean: return "BOOLEAN";
    case tag::kInteger: return "INTEGER";
    case tag::kBitString: return "BIT STRING";
    case tag::kOctetString: return "OCTET STRING";
    case tag::kNull: return "NULL";
    case tag::kOid: return "OBJECT IDENTIFIER";
    case tag::kEnumerated: return "ENUMERATED";
    case tag::kUtf8String: return "UTF8String";
    case tag::kPrintableString: return "PrintableString";
    case tag::kUtcTime: return "UTCTime";
    case tag::kGeneralizedTime: return "GeneralizedTime";
    case tag::kSequence: return "SEQUENCE";
    case tag::kSet: return "SET";
    default: break;
  }
  if ((t & 0xc0) == 0x80) return "[" + std::to_string(t & 0x1f) + "]";
  char buf[16];
  std::snprintf(buf, sizeof buf, "tag 0x%02x", t);
  return buf;
}

void dump_level(ByteView data, std::ostream& out, int depth,
                const std::function<std::string(const std::string&)>& name_of) {
  Reader r(data);
  while (!r.empty()) {
    auto t = r.read_any();
    out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << tag_name(t.tag);
    if (t.tag & 0x20) {
      out << " (" << t.content.size() << " bytes)\n";
      dump_level(t.content, out, depth + 1, name_of);
      continue;
    }
    switch (t.tag) {
      case tag::kOid: {
        auto dotted = decode_oid(t.content);
        out << ' ' << dotted;
        if (name_of) {
          auto n = name_of(dotted);
          if (!n.empty()) out << " (" << n << ')';
        }
        break;
      }
      case tag::kUtf8String:
      case tag::kPrintableString:
      case tag::kUtcTime:
      case tag::kGeneralizedTime:
        out << " '" << std::string(reinterpret_cast<const char*>(t.content.data()), t.content.size())
            << '\'';
        break;
      case tag::kBoolean:
        out << ' ' << (t.content.size() == 1 && t.content[0] ? "TRUE" : "FALSE");
        break;
      case tag::kNull:
        break;
      default:
        out << ' ' << to_hex(t.content);
        break;
    }
    out << '\n';
  }
}

}  // namespace

void dump(ByteView data, std::ostream& out,
          const std::function<std::string(const std::string&)>& name_of) {
  dump_level(data, out, 0, name_of);
}

}  // namespace pac::der
