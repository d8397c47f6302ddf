// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Issuer public-key certificates (minimal X.509 v3, CA only) and chain
// verification from a PAC up to a trust anchor.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pac/certgen.hpp"
#include "pac/crypto.hpp"

namespace pac::certgen {

struct IssuerCertificate {
  Bytes serial_number;
  std::string issuer;
  std::string subject;
  std::int64_t not_before = 0;
  std::int64_t not_after = 0;
  Bytes subject_spki;
  crypto::SignatureAlgorithm signature_algorithm = crypto::SignatureAlgorithm::kEcdsaP256Sha256;
  Bytes signature;

  crypto::PublicKey subject_key() const { return crypto::PublicKey::from_spki(subject_spki); }

  friend bool operator==(const IssuerCertificate&, const IssuerCertificate&) = default;
};

/// Issues a CA certificate for `subject_key`, signed by `issuer_key`. The
/// serial is derived from the content, so issuance is deterministic.
IssuerCertificate issue_ca_certificate(const std::string& subject, const crypto::PublicKey& subject_key,
                                       const std::string& issuer, const crypto::SigningKey& issuer_key,
                                       std::int64_t not_before, std::int64_t validity_seconds);

IssuerCertificate self_signed_anchor(const std::string& name, const crypto::SigningKey& key,
                                     std::int64_t not_before, std::int64_t validity_seconds);

Bytes encode_tbs_certificate(const IssuerCertificate& cert);
Bytes encode_der(const IssuerCertificate& cert);
IssuerCertificate decode_issuer_der(ByteView der);

enum class ChainProblem { kBrokenChain, kNotYetValid, kExpired, kInvalidLeaf };

std::string_view to_string(ChainProblem problem);

struct ChainFailure {
  std::size_t depth;  // 0 = leaf PAC, intermediates follow, anchor last
  ChainProblem problem;
  std::string detail;
};

struct ChainResult {
  std::vector<ChainFailure> failures;

  bool ok() const { return failures.empty(); }
};

/// intermediates[0] issued the leaf, each next one issued the previous, and
/// the anchor issued the last (or the leaf when there are none).
ChainResult verify_chain(const PlatformAttributeCertificate& leaf,
                         std::span<const IssuerCertificate> intermediates,
                         const IssuerCertificate& trust_anchor, std::int64_t now);

}  // namespace pac::certgen
