// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pac {

enum class Errc {
  kInvalidArgument,
  kConfig,
  kCrypto,
  kIo,
  // device-sim
  kDuplicateMac,
  kEmptyImage,
  kNoGpioPins,
  kDuplicatePin,
  kUnknownPin,
  kDisabledPin,
  kPatchOutOfRange,
  kEmptySection,
  kMalformedMac,
  // measure / complist
  kBadDigestLength,
  kMalformedLog,
  kUnknownClass,
  kDuplicateComponent,
  // certgen
  kEmptyComponentList,
  kMissingBaseRef,
  kEmptyChanges,
  kKeyMismatch,
  kDerTruncated,
  kDerBadTag,
  kDerNonMinimalLength,
  kDerTrailingBytes,
  kDerMalformed,
  kDanglingBaseRef,
  kConflictingChange,
  // verify
  kAlgorithmMismatch,
  kNonDeterministicAlgorithm,
  kCorrelationMismatch,
  kNoGroundTruth,
  kChannelTimeout,
  kEkBindingInvalid,
  kNonceMismatch,
  kChainInvalid,
  // wire / store
  kFrameTooLarge,
  kMalformedFrame,
  kUnknownMessageType,
  kProtocol,
  kBindFailure,
  kGroundTruthExists,
};

std::string_view to_string(Errc code);

/// Error raised for contract violations. Verification failures that are
/// results (expired certificates, broken chains) are reported as values.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pac
