// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include "pac/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/ec.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/obj_mac.h>
#include <openssl/param_build.h>
#include <openssl/rand.h>
#include <openssl/x509.h>

#include "pac/der.hpp"
#include "pac/error.hpp"

namespace pac::crypto {

namespace {

[[noreturn]] void openssl_fail(const char* what) {
  unsigned long e = ERR_get_error();
  char buf[256] = {0};
  if (e != 0) ERR_error_string_n(e, buf, sizeof buf);
  ERR_clear_error();
  throw Error(Errc::kCrypto, std::string(what) + (e ? std::string(": ") + buf : ""));
}

struct BnDeleter {
  void operator()(BIGNUM* b) const { BN_clear_free(b); }
};
using Bn = std::unique_ptr<BIGNUM, BnDeleter>;

struct CtxDeleter {
  void operator()(BN_CTX* c) const { BN_CTX_free(c); }
};
using BnCtx = std::unique_ptr<BN_CTX, CtxDeleter>;

struct GroupDeleter {
  void operator()(EC_GROUP* g) const { EC_GROUP_free(g); }
};
struct PointDeleter {
  void operator()(EC_POINT* p) const { EC_POINT_free(p); }
};
using Point = std::unique_ptr<EC_POINT, PointDeleter>;

Bn bn_new() {
  Bn b(BN_new());
  if (!b) openssl_fail("BN_new");
  return b;
}

Bn bn_from(ByteView be) {
  Bn b(BN_bin2bn(be.data(), static_cast<int>(be.size()), nullptr));
  if (!b) openssl_fail("BN_bin2bn");
  return b;
}

Bytes bn_to(const BIGNUM* b, std::size_t width) {
  Bytes out(width);
  if (BN_bn2binpad(b, out.data(), static_cast<int>(width)) < 0) openssl_fail("BN_bn2binpad");
  return out;
}

const EC_GROUP* p256_group() {
  static const std::unique_ptr<EC_GROUP, GroupDeleter> group(
      EC_GROUP_new_by_curve_name(NID_X9_62_prime256v1));
  if (!group) openssl_fail("EC_GROUP_new_by_curve_name");
  return group.get();
}

const BIGNUM* p256_order() { return EC_GROUP_get0_order(p256_group()); }

std::shared_ptr<EVP_PKEY> wrap(EVP_PKEY* p) {
  if (!p) openssl_fail("EVP_PKEY");
  return {p, EVP_PKEY_free};
}

Bytes spki_of(EVP_PKEY* p) {
  int len = i2d_PUBKEY(p, nullptr);
  if (len <= 0) openssl_fail("i2d_PUBKEY");
  Bytes out(static_cast<std::size_t>(len));
  unsigned char* cursor = out.data();
  i2d_PUBKEY(p, &cursor);
  return out;
}

SignatureAlgorithm classify(EVP_PKEY* p) {
  if (EVP_PKEY_is_a(p, "EC")) {
    char group[64] = {0};
    size_t len = 0;
    if (!EVP_PKEY_get_utf8_string_param(p, OSSL_PKEY_PARAM_GROUP_NAME, group, sizeof group, &len) ||
        std::string_view(group) != "prime256v1") {
      throw Error(Errc::kKeyMismatch, "EC key is not on P-256");
    }
    return SignatureAlgorithm::kEcdsaP256Sha256;
  }
  if (EVP_PKEY_is_a(p, "RSA")) {
    if (EVP_PKEY_get_bits(p) != 2048) throw Error(Errc::kKeyMismatch, "RSA key is not 2048 bits");
    return SignatureAlgorithm::kRsa2048Pkcs1v15Sha256;
  }
  throw Error(Errc::kKeyMismatch, "unsupported key type");
}

EVP_PKEY* p256_pkey(ByteView point, const BIGNUM* priv) {
  std::unique_ptr<OSSL_PARAM_BLD, decltype(&OSSL_PARAM_BLD_free)> bld(OSSL_PARAM_BLD_new(),
                                                                       OSSL_PARAM_BLD_free);
  if (!bld) openssl_fail("OSSL_PARAM_BLD_new");
  OSSL_PARAM_BLD_push_utf8_string(bld.get(), OSSL_PKEY_PARAM_GROUP_NAME, "prime256v1", 0);
  OSSL_PARAM_BLD_push_octet_string(bld.get(), OSSL_PKEY_PARAM_PUB_KEY, point.data(), point.size());
  if (priv) OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_PRIV_KEY, priv);
  std::unique_ptr<OSSL_PARAM, decltype(&OSSL_PARAM_free)> params(OSSL_PARAM_BLD_to_param(bld.get()),
                                                                  OSSL_PARAM_free);
  std::unique_ptr<EVP_PKEY_CTX, decltype(&EVP_PKEY_CTX_free)> ctx(
      EVP_PKEY_CTX_new_from_name(nullptr, "EC", nullptr), EVP_PKEY_CTX_free);
  EVP_PKEY* out = nullptr;
  if (!ctx || EVP_PKEY_fromdata_init(ctx.get()) <= 0 ||
      EVP_PKEY_fromdata(ctx.get(), &out, priv ? EVP_PKEY_KEYPAIR : EVP_PKEY_PUBLIC_KEY,
                        params.get()) <= 0) {
    openssl_fail("EVP_PKEY_fromdata");
  }
  return out;
}

}  // namespace

Digest sha256(ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr)) {
    openssl_fail("EVP_Digest");
  }
  return out;
}

Digest hmac_sha256(ByteView key, ByteView message) {
  Digest out{};
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(),
            out.data(), &len)) {
    openssl_fail("HMAC");
  }
  return out;
}

Bytes random_bytes(std::size_t count) {
  Bytes out(count);
  if (count && RAND_bytes(out.data(), static_cast<int>(count)) != 1) openssl_fail("RAND_bytes");
  return out;
}

std::string_view oid_of(SignatureAlgorithm alg) {
  return alg == SignatureAlgorithm::kEcdsaP256Sha256 ? kOidEcdsaWithSha256 : kOidSha256WithRsa;
}

std::optional<SignatureAlgorithm> algorithm_from_oid(std::string_view oid) {
  if (oid == kOidEcdsaWithSha256) return SignatureAlgorithm::kEcdsaP256Sha256;
  if (oid == kOidSha256WithRsa) return SignatureAlgorithm::kRsa2048Pkcs1v15Sha256;
  return std::nullopt;
}

std::string_view name_of(SignatureAlgorithm alg) {
  return alg == SignatureAlgorithm::kEcdsaP256Sha256 ? "ecdsa-p256-sha256-rfc6979"
                                                     : "rsa2048-pkcs1v15-sha256";
}

// ---------------------------------------------------------------- P-256

namespace p256 {

namespace {

// HMAC-SHA-256 DRBG of RFC 6979 section 3.2, specialised to qlen == hlen == 256.
class NonceGenerator {
 public:
  NonceGenerator(ByteView scalar, ByteView hash_octets) : v_(32, 0x01), k_(32, 0x00) {
    reseed(0x00, scalar, hash_octets);
    reseed(0x01, scalar, hash_octets);
  }

  Bytes next() {
    if (!first_) reseed(0x00, {}, {});
    first_ = false;
    for (;;) {
      auto t = hmac_sha256(k_, v_);
      v_.assign(t.begin(), t.end());
      Bn candidate = bn_from(v_);
      if (!BN_is_zero(candidate.get()) && BN_cmp(candidate.get(), p256_order()) < 0) return v_;
      reseed(0x00, {}, {});
    }
  }

 private:
  void reseed(std::uint8_t marker, ByteView scalar, ByteView hash_octets) {
    Bytes msg = v_;
    msg.push_back(marker);
    append(msg, scalar);
    append(msg, hash_octets);
    auto nk = hmac_sha256(k_, msg);
    k_.assign(nk.begin(), nk.end());
    auto nv = hmac_sha256(k_, v_);
    v_.assign(nv.begin(), nv.end());
  }

  Bytes v_;
  Bytes k_;
  bool first_ = true;
};

// bits2octets(h): qlen == hlen, so a single reduction modulo n.
Bytes hash_octets(ByteView message_hash, BN_CTX* ctx) {
  Bn h = bn_from(message_hash);
  if (!BN_nnmod(h.get(), h.get(), p256_order(), ctx)) openssl_fail("BN_nnmod");
  return bn_to(h.get(), kScalarSize);
}

void check_inputs(ByteView private_scalar, ByteView message_hash) {
  if (private_scalar.size() != kScalarSize || message_hash.size() != 32) {
    throw Error(Errc::kInvalidArgument, "P-256 needs a 32-byte scalar and a 32-byte hash");
  }
}

}  // namespace

Bytes rfc6979_nonce(ByteView private_scalar, ByteView message_hash) {
  check_inputs(private_scalar, message_hash);
  BnCtx ctx(BN_CTX_new());
  return NonceGenerator(private_scalar, hash_octets(message_hash, ctx.get())).next();
}

Signature sign_hash(ByteView private_scalar, ByteView message_hash, Bytes* nonce_out) {
  check_inputs(private_scalar, message_hash);
  BnCtx ctx(BN_CTX_new());
  const EC_GROUP* group = p256_group();
  const BIGNUM* n = p256_order();
  Bn x = bn_from(private_scalar);
  Bytes e_octets = hash_octets(message_hash, ctx.get());
  Bn e = bn_from(e_octets);
  NonceGenerator nonces(private_scalar, e_octets);

  for (;;) {
    Bytes k_octets = nonces.next();
    Bn k = bn_from(k_octets);
    Point big_r(EC_POINT_new(group));
    if (!big_r || !EC_POINT_mul(group, big_r.get(), k.get(), nullptr, nullptr, ctx.get())) {
      openssl_fail("EC_POINT_mul");
    }
    Bn rx = bn_new();
    if (!EC_POINT_get_affine_coordinates(group, big_r.get(), rx.get(), nullptr, ctx.get())) {
      openssl_fail("EC_POINT_get_affine_coordinates");
    }
    // r = x(kG) mod n;  s = k^-1 (e + r x) mod n
    Bn r = bn_new(), rx_mul = bn_new(), sum = bn_new(), kinv = bn_new(), s = bn_new();
    if (!BN_nnmod(r.get(), rx.get(), n, ctx.get()) ||
        !BN_mod_mul(rx_mul.get(), r.get(), x.get(), n, ctx.get()) ||
        !BN_mod_add(sum.get(), e.get(), rx_mul.get(), n, ctx.get()) ||
        !BN_mod_inverse(kinv.get(), k.get(), n, ctx.get()) ||
        !BN_mod_mul(s.get(), kinv.get(), sum.get(), n, ctx.get())) {
      openssl_fail("ECDSA arithmetic");
    }
    if (BN_is_zero(r.get()) || BN_is_zero(s.get())) continue;
    if (nonce_out) *nonce_out = std::move(k_octets);
    return {bn_to(r.get(), 32), bn_to(s.get(), 32)};
  }
}

Bytes public_point(ByteView private_scalar) {
  if (private_scalar.size() != kScalarSize) throw Error(Errc::kInvalidArgument, "scalar must be 32 bytes");
  BnCtx ctx(BN_CTX_new());
  const EC_GROUP* group = p256_group();
  Bn x = bn_from(private_scalar);
  if (BN_is_zero(x.get()) || BN_cmp(x.get(), p256_order()) >= 0) {
    throw Error(Errc::kInvalidArgument, "scalar out of range");
  }
  Point q(EC_POINT_new(group));
  if (!q || !EC_POINT_mul(group, q.get(), x.get(), nullptr, nullptr, ctx.get())) {
    openssl_fail("EC_POINT_mul");
  }
  Bytes out(kPointSize);
  if (EC_POINT_point2oct(group, q.get(), POINT_CONVERSION_UNCOMPRESSED, out.data(), out.size(),
                         ctx.get()) != kPointSize) {
    openssl_fail("EC_POINT_point2oct");
  }
  return out;
}

Bytes scalar_from_seed(ByteView seed) {
  static constexpr std::string_view kTag = "pacattest/p256-scalar";
  Bytes wide;
  for (std::uint8_t block = 0; block < 2; ++block) {
    Bytes msg = pac::to_bytes(kTag);
    msg.push_back(block);
    append(msg, seed);
    append(wide, sha256(msg));
  }
  BnCtx ctx(BN_CTX_new());
  Bn w = bn_from(wide);
  Bn n_minus_one = bn_new();
  BN_copy(n_minus_one.get(), p256_order());
  BN_sub_word(n_minus_one.get(), 1);
  Bn out = bn_new();
  if (!BN_nnmod(out.get(), w.get(), n_minus_one.get(), ctx.get())) openssl_fail("BN_nnmod");
  BN_add_word(out.get(), 1);
  return bn_to(out.get(), kScalarSize);
}

Bytes encode_signature(const Signature& sig) {
  return der::encode([&](der::Writer& w) {
    w.sequence([&](der::Writer& s) { s.unsigned_integer(sig.r).unsigned_integer(sig.s); });
  });
}

}  // namespace p256

// ---------------------------------------------------------------- PublicKey

PublicKey PublicKey::from_spki(ByteView spki_der) {
  const unsigned char* cursor = spki_der.data();
  EVP_PKEY* raw = d2i_PUBKEY(nullptr, &cursor, static_cast<long>(spki_der.size()));
  if (!raw) openssl_fail("d2i_PUBKEY");
  PublicKey k;
  k.pkey_ = wrap(raw);
  if (cursor != spki_der.data() + spki_der.size()) {
    throw Error(Errc::kDerTrailingBytes, "trailing bytes after SubjectPublicKeyInfo");
  }
  k.algorithm_ = classify(raw);
  k.spki_ = spki_of(raw);
  if (k.spki_.size() != spki_der.size() || !std::equal(k.spki_.begin(), k.spki_.end(), spki_der.begin())) {
    throw Error(Errc::kDerMalformed, "SubjectPublicKeyInfo is not canonical");
  }
  return k;
}

PublicKey PublicKey::from_p256_point(ByteView point) {
  if (point.size() != p256::kPointSize || point[0] != 0x04) {
    throw Error(Errc::kInvalidArgument, "expected an uncompressed P-256 point");
  }
  PublicKey k;
  k.pkey_ = wrap(p256_pkey(point, nullptr));
  k.algorithm_ = SignatureAlgorithm::kEcdsaP256Sha256;
  k.spki_ = spki_of(k.pkey_.get());
  return k;
}

bool PublicKey::verify(ByteView message, ByteView signature) const {
  if (!pkey_) return false;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> md(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_PKEY_CTX* pctx = nullptr;
  if (!md || EVP_DigestVerifyInit(md.get(), &pctx, EVP_sha256(), nullptr, pkey_.get()) != 1) {
    openssl_fail("EVP_DigestVerifyInit");
  }
  if (algorithm_ == SignatureAlgorithm::kRsa2048Pkcs1v15Sha256) {
    EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PADDING);
  }
  int rc = EVP_DigestVerify(md.get(), signature.data(), signature.size(), message.data(),
                            message.size());
  ERR_clear_error();
  return rc == 1;
}

// ---------------------------------------------------------------- SigningKey

SigningKey SigningKey::generate(SignatureAlgorithm alg) {
  if (alg == SignatureAlgorithm::kEcdsaP256Sha256) {
    return p256_from_scalar(p256::scalar_from_seed(random_bytes(32)));
  }
  EVP_PKEY* raw = EVP_PKEY_Q_keygen(nullptr, nullptr, "RSA", static_cast<size_t>(2048));
  SigningKey k;
  k.pkey_ = wrap(raw);
  k.algorithm_ = alg;
  k.public_ = PublicKey::from_spki(spki_of(raw));
  return k;
}

SigningKey SigningKey::p256_from_scalar(ByteView scalar) {
  Bytes point = p256::public_point(scalar);
  Bn priv = bn_from(scalar);
  SigningKey k;
  k.pkey_ = wrap(p256_pkey(point, priv.get()));
  k.algorithm_ = SignatureAlgorithm::kEcdsaP256Sha256;
  k.scalar_.assign(scalar.begin(), scalar.end());
  k.public_ = PublicKey::from_p256_point(point);
  return k;
}

SigningKey SigningKey::from_pkcs8(ByteView der) {
  const unsigned char* cursor = der.data();
  PKCS8_PRIV_KEY_INFO* info = d2i_PKCS8_PRIV_KEY_INFO(nullptr, &cursor, static_cast<long>(der.size()));
  if (!info) openssl_fail("d2i_PKCS8_PRIV_KEY_INFO");
  if (cursor != der.data() + der.size()) {
    PKCS8_PRIV_KEY_INFO_free(info);
    throw Error(Errc::kDerTrailingBytes, "trailing bytes after PrivateKeyInfo");
  }
  EVP_PKEY* raw = EVP_PKCS82PKEY(info);
  PKCS8_PRIV_KEY_INFO_free(info);
  auto pkey = wrap(raw);
  auto alg = classify(raw);
  if (alg == SignatureAlgorithm::kEcdsaP256Sha256) {
    BIGNUM* priv = nullptr;
    if (!EVP_PKEY_get_bn_param(raw, OSSL_PKEY_PARAM_PRIV_KEY, &priv)) openssl_fail("get priv");
    Bn owned(priv);
    return p256_from_scalar(bn_to(owned.get(), p256::kScalarSize));
  }
  SigningKey k;
  k.pkey_ = std::move(pkey);
  k.algorithm_ = alg;
  k.public_ = PublicKey::from_spki(spki_of(raw));
  return k;
}

Bytes SigningKey::to_pkcs8() const {
  PKCS8_PRIV_KEY_INFO* info = EVP_PKEY2PKCS8(pkey_.get());
  if (!info) openssl_fail("EVP_PKEY2PKCS8");
  int len = i2d_PKCS8_PRIV_KEY_INFO(info, nullptr);
  Bytes out(static_cast<std::size_t>(len > 0 ? len : 0));
  unsigned char* cursor = out.data();
  if (len <= 0 || i2d_PKCS8_PRIV_KEY_INFO(info, &cursor) != len) {
    PKCS8_PRIV_KEY_INFO_free(info);
    openssl_fail("i2d_PKCS8_PRIV_KEY_INFO");
  }
  PKCS8_PRIV_KEY_INFO_free(info);
  return out;
}

Bytes SigningKey::sign(ByteView message) const {
  if (algorithm_ == SignatureAlgorithm::kEcdsaP256Sha256) {
    auto h = sha256(message);
    return p256::encode_signature(p256::sign_hash(scalar_, h));
  }
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> md(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_PKEY_CTX* pctx = nullptr;
  if (!md || EVP_DigestSignInit(md.get(), &pctx, EVP_sha256(), nullptr, pkey_.get()) != 1 ||
      EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PADDING) != 1) {
    openssl_fail("EVP_DigestSignInit");
  }
  size_t len = 0;
  if (EVP_DigestSign(md.get(), nullptr, &len, message.data(), message.size()) != 1) {
    openssl_fail("EVP_DigestSign");
  }
  Bytes out(len);
  if (EVP_DigestSign(md.get(), out.data(), &len, message.data(), message.size()) != 1) {
    openssl_fail("EVP_DigestSign");
  }
  out.resize(len);
  return out;
}

}  // namespace pac::crypto
