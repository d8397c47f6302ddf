// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Directory-backed, append-only certificate store.
//
//   <root>/issuer/signing-key.p8.der      PKCS#8 private key
//   <root>/issuer/anchor.cert.der         trust anchor (self-signed)
//   <root>/issuer/intermediate-<n>.cert.der
//   <root>/issuer/policy.json
//   <root>/devices/<id>/<seq>.pac.der     six-digit issuance sequence
//   <root>/devices/<id>/GROUND_TRUTH      file name of the ground truth
//   <root>/devices/<id>/ISSUER            SHA-256 of the issuer SPKI (hex)
//
// Certificate files are never rewritten once created.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pac/certgen.hpp"
#include "pac/crypto.hpp"
#include "pac/issuer.hpp"

namespace pac::store {

inline constexpr const char* kStoreEnv = "PAC_STORE";

struct IssuerMaterial {
  crypto::SigningKey key;
  certgen::IssuerCertificate anchor;
  std::vector<certgen::IssuerCertificate> intermediates;  // leaf-side first
  certgen::IssuerPolicy policy;
};

/// New two-tier issuer: the signing key is also the self-signed anchor.
IssuerMaterial make_issuer(crypto::SigningKey key, const certgen::IssuerPolicy& policy);

struct StoredCertificate {
  std::filesystem::path path;
  certgen::PlatformAttributeCertificate pac;
  bool ground_truth = false;
};

class CertStore {
 public:
  explicit CertStore(std::filesystem::path root);
  /// Root from $PAC_STORE; kInvalidArgument when unset.
  static CertStore from_environment();

  const std::filesystem::path& root() const { return root_; }

  bool has_issuer() const;
  void save_issuer(const IssuerMaterial& issuer);
  IssuerMaterial load_issuer() const;

  std::vector<std::string> devices() const;

  /// Appends under the per-device write lock (kNoGroundTruth for a device
  /// without one).
  std::filesystem::path append(const std::string& device_id, const certgen::PlatformAttributeCertificate& pac);
  /// Starts a device record and records which issuer key it belongs to.
  /// kGroundTruthExists when the device already has certificates.
  std::filesystem::path append_ground_truth(const std::string& device_id,
                                            const certgen::PlatformAttributeCertificate& pac,
                                            const crypto::PublicKey& issuer);

  std::optional<certgen::PlatformAttributeCertificate> ground_truth(const std::string& device_id) const;
  /// Ground truth first, then issuance order.
  std::vector<StoredCertificate> entries(const std::string& device_id) const;
  std::optional<std::string> issuer_fingerprint(const std::string& device_id) const;

 private:
  std::filesystem::path device_dir(const std::string& device_id) const;
  std::filesystem::path write_locked(const std::string& device_id, const certgen::PlatformAttributeCertificate& pac,
                                     const crypto::PublicKey* ground_truth_issuer);

  std::filesystem::path root_;
};

/// Accepts [A-Za-z0-9._-]+ (kInvalidArgument otherwise).
/// Hex SHA-256 of the key's SubjectPublicKeyInfo.
std::string fingerprint(const crypto::PublicKey& key);

void check_device_id(const std::string& device_id);

Bytes read_file(const std::filesystem::path& path);
/// Create-only write (kIo if the file exists).
void write_new_file(const std::filesystem::path& path, ByteView data);

}  // namespace pac::store
