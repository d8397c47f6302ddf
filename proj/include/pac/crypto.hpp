// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "pac/bytes.hpp"

typedef struct evp_pkey_st EVP_PKEY;

namespace pac::crypto {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(ByteView data);
Digest hmac_sha256(ByteView key, ByteView message);
Bytes random_bytes(std::size_t count);

inline Bytes to_bytes(const Digest& d) { return {d.begin(), d.end()}; }

inline constexpr std::string_view kOidSha256 = "2.16.840.1.101.3.4.2.1";
inline constexpr std::string_view kOidEcdsaWithSha256 = "1.2.840.10045.4.3.2";
inline constexpr std::string_view kOidSha256WithRsa = "1.2.840.113549.1.1.11";

/// Only deterministic schemes are representable: signing the same message
/// twice with the same key yields byte-identical signatures.
enum class SignatureAlgorithm {
  kEcdsaP256Sha256,  // RFC 6979 nonces
  kRsa2048Pkcs1v15Sha256,
};

std::string_view oid_of(SignatureAlgorithm alg);
std::optional<SignatureAlgorithm> algorithm_from_oid(std::string_view oid);
std::string_view name_of(SignatureAlgorithm alg);

namespace p256 {

inline constexpr std::size_t kScalarSize = 32;
inline constexpr std::size_t kPointSize = 65;  // uncompressed SEC1

struct Signature {
  Bytes r;  // 32 bytes, big-endian
  Bytes s;
};

/// Deterministic nonce per RFC 6979 section 3.2 (HMAC-SHA-256 DRBG).
Bytes rfc6979_nonce(ByteView private_scalar, ByteView message_hash);

/// Signs a 32-byte SHA-256 hash. When nonce_out is set it receives the k used.
Signature sign_hash(ByteView private_scalar, ByteView message_hash, Bytes* nonce_out = nullptr);

Bytes public_point(ByteView private_scalar);

/// Maps arbitrary seed material onto a scalar in [1, n-1].
Bytes scalar_from_seed(ByteView seed);

Bytes encode_signature(const Signature& sig);  // ECDSA-Sig-Value DER

}  // namespace p256

class PublicKey {
 public:
  static PublicKey from_spki(ByteView spki_der);
  static PublicKey from_p256_point(ByteView point);

  SignatureAlgorithm algorithm() const { return algorithm_; }
  const Bytes& spki() const { return spki_; }
  bool verify(ByteView message, ByteView signature) const;

  friend bool operator==(const PublicKey& a, const PublicKey& b) { return a.spki_ == b.spki_; }

 private:
  SignatureAlgorithm algorithm_ = SignatureAlgorithm::kEcdsaP256Sha256;
  Bytes spki_;
  std::shared_ptr<EVP_PKEY> pkey_;
};

class SigningKey {
 public:
  /// Fresh key from the system RNG.
  static SigningKey generate(SignatureAlgorithm alg);
  static SigningKey p256_from_scalar(ByteView scalar);
  /// PKCS#8 PrivateKeyInfo DER, the on-disk key format.
  static SigningKey from_pkcs8(ByteView der);

  Bytes to_pkcs8() const;
  SignatureAlgorithm algorithm() const { return algorithm_; }
  const PublicKey& public_key() const { return public_; }
  Bytes sign(ByteView message) const;

 private:
  SignatureAlgorithm algorithm_ = SignatureAlgorithm::kEcdsaP256Sha256;
  std::shared_ptr<EVP_PKEY> pkey_;
  Bytes scalar_;  // P-256 only
  PublicKey public_;
};

}  // namespace pac::crypto
