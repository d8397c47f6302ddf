// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include "pac/bytes.hpp"

#include "pac/error.hpp"

namespace pac {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kConfig: return "Config";
    case Errc::kCrypto: return "Crypto";
    case Errc::kIo: return "Io";
    case Errc::kDuplicateMac: return "DuplicateMac";
    case Errc::kEmptyImage: return "EmptyImage";
    case Errc::kNoGpioPins: return "NoGpioPins";
    case Errc::kDuplicatePin: return "DuplicatePin";
    case Errc::kUnknownPin: return "UnknownPin";
    case Errc::kDisabledPin: return "DisabledPin";
    case Errc::kPatchOutOfRange: return "PatchOutOfRange";
    case Errc::kEmptySection: return "EmptySection";
    case Errc::kMalformedMac: return "MalformedMac";
    case Errc::kBadDigestLength: return "BadDigestLength";
    case Errc::kMalformedLog: return "MalformedLog";
    case Errc::kUnknownClass: return "UnknownClass";
    case Errc::kDuplicateComponent: return "DuplicateComponent";
    case Errc::kEmptyComponentList: return "EmptyComponentList";
    case Errc::kMissingBaseRef: return "MissingBaseRef";
    case Errc::kEmptyChanges: return "EmptyChanges";
    case Errc::kKeyMismatch: return "KeyMismatch";
    case Errc::kDerTruncated: return "DerTruncated";
    case Errc::kDerBadTag: return "DerBadTag";
    case Errc::kDerNonMinimalLength: return "DerNonMinimalLength";
    case Errc::kDerTrailingBytes: return "DerTrailingBytes";
    case Errc::kDerMalformed: return "DerMalformed";
    case Errc::kDanglingBaseRef: return "DanglingBaseRef";
    case Errc::kConflictingChange: return "ConflictingChange";
    case Errc::kAlgorithmMismatch: return "AlgorithmMismatch";
    case Errc::kNonDeterministicAlgorithm: return "NonDeterministicAlgorithm";
    case Errc::kCorrelationMismatch: return "CorrelationMismatch";
    case Errc::kNoGroundTruth: return "NoGroundTruth";
    case Errc::kChannelTimeout: return "ChannelTimeout";
    case Errc::kEkBindingInvalid: return "EkBindingInvalid";
    case Errc::kNonceMismatch: return "NonceMismatch";
    case Errc::kChainInvalid: return "ChainInvalid";
    case Errc::kFrameTooLarge: return "FrameTooLarge";
    case Errc::kMalformedFrame: return "MalformedFrame";
    case Errc::kUnknownMessageType: return "UnknownMessageType";
    case Errc::kProtocol: return "Protocol";
    case Errc::kBindFailure: return "BindFailure";
    case Errc::kGroundTruthExists: return "GroundTruthExists";
  }
  return "Unknown";
}

std::string to_hex(ByteView data, bool upper) {
  const char* digits = upper ? "0123456789ABCDEF" : "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

namespace {

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(Errc::kInvalidArgument, "odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::kInvalidArgument, "non-hex character");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

Bytes be_bytes(std::uint64_t value, std::size_t width) {
  Bytes out(width, 0);
  for (std::size_t i = 0; i < width && i < 8; ++i) {
    out[width - 1 - i] = static_cast<std::uint8_t>(value >> (8 * i));
  }
  return out;
}

}  // namespace pac
