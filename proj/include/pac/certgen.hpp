// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Platform Attribute Certificates (PACs): construction, deterministic
// signing, strict DER encoding/decoding and validation. The layout follows
// the RFC 5755 AttributeCertificate shape; see docs/pac-asn1.md.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pac/bytes.hpp"
#include "pac/complist.hpp"
#include "pac/crypto.hpp"
#include "pac/measure.hpp"
#include "pac/platform.hpp"

namespace pac::certgen {

/// Attribute type OIDs. The defaults live under a UUID-derived 2.25 arc
/// owned by this project; TCG-assigned OIDs can be swapped in.
struct Profile {
  std::string platform_manufacturer;
  std::string platform_manufacturer_id;
  std::string platform_model;
  std::string platform_version;
  std::string platform_serial;
  std::string component_identifiers;
  std::string component_changes;
  std::string ek_reference;
  std::string base_certificate_ref;
  std::string policy_text;

  static const Profile& project_default();
  /// Profile with every attribute placed under `arc` (arc.1 .. arc.10).
  static Profile under_arc(const std::string& arc);
  /// Display name for a known OID, empty otherwise.
  std::string name_of(const std::string& oid) const;
};

inline constexpr std::string_view kProjectArc = "2.25.216724364497587353406497911766843473946";

/// Issuer-side policy. The validity window is a constant of the policy, not
/// the wall clock, so re-issuing for an unchanged platform reproduces the
/// certificate byte for byte.
struct IssuerPolicy {
  std::string issuer_name = "pacattest verifier CA";
  std::int64_t not_before = 1704067200;           // 2024-01-01T00:00:00Z
  std::int64_t validity_seconds = 3652LL * 86400;  // ten years
  std::string policy_text = "pacattest platform attribute certificate policy v1";

  friend bool operator==(const IssuerPolicy&, const IssuerPolicy&) = default;
};

enum class PacKind { kBase, kDelta };

inline constexpr std::size_t kSerialSize = 20;

struct TbsPac {
  int version = 2;
  crypto::Digest holder_ek_digest{};  // SHA-256(ek_public)
  Bytes ek_public;
  Bytes ek_binding_sig;
  std::string issuer;
  Bytes serial_number;  // kSerialSize bytes
  std::int64_t not_before = 0;
  std::int64_t not_after = 0;
  PlatformMeta platform;
  PacKind kind = PacKind::kBase;
  std::vector<complist::ComponentIdentifier> components;  // base
  std::vector<complist::ComponentChange> changes;         // delta
  std::optional<Bytes> base_certificate_ref;              // delta
  std::string policy_text;
  crypto::SignatureAlgorithm signature_algorithm = crypto::SignatureAlgorithm::kEcdsaP256Sha256;

  friend bool operator==(const TbsPac&, const TbsPac&) = default;
};

struct PlatformAttributeCertificate {
  TbsPac tbs;
  Bytes signature;

  complist::ComponentList component_list() const { return {tbs.platform, tbs.components}; }

  friend bool operator==(const PlatformAttributeCertificate&, const PlatformAttributeCertificate&) = default;
};

struct BaseMode {};
struct DeltaMode {
  Bytes base_serial;
  std::vector<complist::ComponentChange> changes;
};
using Mode = std::variant<BaseMode, DeltaMode>;

/// serial = first 20 bytes of SHA-256(canonical JSON || ek_public || tag),
/// tag = "base" or "delta" || base serial.
Bytes derive_serial(const complist::ComponentList& list, ByteView ek_public, const Mode& mode);

TbsPac build_tbs(const complist::ComponentList& list, const measure::EkReference& ek,
                 const IssuerPolicy& policy, const Mode& mode,
                 crypto::SignatureAlgorithm algorithm);

PlatformAttributeCertificate sign_pac(const TbsPac& tbs, const crypto::SigningKey& key);

Bytes encode_tbs(const TbsPac& tbs, const Profile& profile = Profile::project_default());
Bytes encode_der(const PlatformAttributeCertificate& pac,
                 const Profile& profile = Profile::project_default());
/// Strict: kDerTruncated, kDerBadTag, kDerNonMinimalLength,
/// kDerTrailingBytes, or kDerMalformed for anything non-canonical.
PlatformAttributeCertificate decode_der(ByteView der,
                                        const Profile& profile = Profile::project_default());

enum class Check {
  kSignatureInvalid,
  kAlgorithmMismatch,
  kNotYetValid,
  kExpired,
  kStructure,
};

std::string_view to_string(Check check);

struct Finding {
  Check check;
  std::string detail;
};

struct ValidationResult {
  std::vector<Finding> failures;

  bool ok() const { return failures.empty(); }
  bool has(Check check) const;
};

/// Every failed check is listed; OK iff signature, window and structure hold.
ValidationResult validate_pac(const PlatformAttributeCertificate& pac,
                              const crypto::PublicKey& issuer_public, std::int64_t now);

/// Structural invariants only (no signature, no clock).
std::vector<std::string> structural_problems(const TbsPac& tbs);

/// Effective component list after replaying the delta chain over the base.
/// Each delta must reference the previous certificate's serial.
complist::ComponentList apply_deltas(const PlatformAttributeCertificate& base,
                                     std::span<const PlatformAttributeCertificate> deltas);

}  // namespace pac::certgen
