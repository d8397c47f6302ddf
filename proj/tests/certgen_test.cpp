// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <openssl/asn1.h>
#include <openssl/bio.h>

#include <random>
#include <sstream>

#include "pac/certgen.hpp"
#include "pac/der.hpp"
#include "pac/error.hpp"
#include "support.hpp"

namespace pac::certgen {
namespace {

using pac::testing::kNow;

struct Fixture {
  device::DeviceState state = pac::testing::reference_device();
  measure::MeasurementLog log = measure::measure(state);
  complist::ComponentList list =
      complist::parse_log(measure::render_entries(log.entries), state.platform);
  crypto::SigningKey key = pac::testing::test_issuer_key();
  IssuerPolicy policy;

  TbsPac tbs(const Mode& mode = BaseMode{}) const { return build_tbs(list, log.ek, policy, mode, key.algorithm()); }
  PlatformAttributeCertificate pac(const Mode& mode = BaseMode{}) const { return sign_pac(tbs(mode), key); }
};

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

TEST(BuildTbs, BaseFields) {
  Fixture f;
  auto t = f.tbs();
  EXPECT_EQ(t.kind, PacKind::kBase);
  EXPECT_EQ(t.components.size(), 10u);
  EXPECT_EQ(t.serial_number.size(), kSerialSize);
  EXPECT_EQ(t.holder_ek_digest, crypto::sha256(f.log.ek.ek_public));
  EXPECT_EQ(t.not_before, f.policy.not_before);
  EXPECT_EQ(t.not_after, f.policy.not_before + f.policy.validity_seconds);
  EXPECT_TRUE(structural_problems(t).empty());
}

TEST(BuildTbs, SerialIsContentDerived) {
  Fixture f;
  EXPECT_EQ(f.tbs().serial_number, f.tbs().serial_number);
  auto other = f;
  other.list.components[0].serial = "1";
  EXPECT_NE(other.tbs().serial_number, f.tbs().serial_number);
  // Component order does not matter.
  auto reversed = f;
  std::reverse(reversed.list.components.begin(), reversed.list.components.end());
  EXPECT_EQ(reversed.tbs().serial_number, f.tbs().serial_number);
}

TEST(BuildTbs, Errors) {
  Fixture f;
  auto empty = f;
  empty.list.components.clear();
  EXPECT_EQ(code_of([&] { empty.tbs(); }), Errc::kEmptyComponentList);
  EXPECT_EQ(code_of([&] { f.tbs(DeltaMode{{}, {}}); }), Errc::kMissingBaseRef);
  EXPECT_EQ(code_of([&] { f.tbs(DeltaMode{Bytes(20, 1), {}}); }), Errc::kEmptyChanges);
  auto dup = f;
  dup.list.components.push_back(dup.list.components.front());
  EXPECT_EQ(code_of([&] { dup.tbs(); }), Errc::kDuplicateComponent);
}

TEST(SignPac, DeterministicAndKeyChecked) {
  Fixture f;
  EXPECT_EQ(f.pac(), f.pac());
  EXPECT_EQ(encode_der(f.pac()), encode_der(f.pac()));
  auto rsa = crypto::SigningKey::generate(crypto::SignatureAlgorithm::kRsa2048Pkcs1v15Sha256);
  EXPECT_EQ(code_of([&] { sign_pac(f.tbs(), rsa); }), Errc::kKeyMismatch);
  auto rsa_tbs = build_tbs(f.list, f.log.ek, f.policy, BaseMode{}, rsa.algorithm());
  auto rsa_pac = sign_pac(rsa_tbs, rsa);
  EXPECT_EQ(rsa_pac, sign_pac(rsa_tbs, rsa));
  EXPECT_TRUE(validate_pac(decode_der(encode_der(rsa_pac)), rsa.public_key(), kNow).ok());
}

TEST(Validate, ChecksEachFailure) {
  Fixture f;
  auto pac = f.pac();
  EXPECT_TRUE(validate_pac(pac, f.key.public_key(), kNow).ok());

  auto other = crypto::SigningKey::generate(crypto::SignatureAlgorithm::kEcdsaP256Sha256);
  EXPECT_TRUE(validate_pac(pac, other.public_key(), kNow).has(Check::kSignatureInvalid));

  auto rsa = crypto::SigningKey::generate(crypto::SignatureAlgorithm::kRsa2048Pkcs1v15Sha256);
  EXPECT_TRUE(validate_pac(pac, rsa.public_key(), kNow).has(Check::kAlgorithmMismatch));

  EXPECT_TRUE(validate_pac(pac, f.key.public_key(), f.policy.not_before - 1).has(Check::kNotYetValid));
  auto late = validate_pac(pac, f.key.public_key(), f.policy.not_before + f.policy.validity_seconds + 1);
  EXPECT_TRUE(late.has(Check::kExpired));
  EXPECT_FALSE(late.has(Check::kSignatureInvalid));

  auto broken = pac;
  broken.tbs.components.clear();
  auto r = validate_pac(broken, other.public_key(), 0);
  EXPECT_TRUE(r.has(Check::kStructure));
  EXPECT_TRUE(r.has(Check::kSignatureInvalid));
  EXPECT_TRUE(r.has(Check::kNotYetValid));
}

TEST(Der, RoundTripAndProfile) {
  Fixture f;
  auto pac = f.pac();
  auto der = encode_der(pac);
  EXPECT_EQ(decode_der(der), pac);
  auto custom = Profile::under_arc("1.3.6.1.4.1.99999.1");
  auto der2 = encode_der(pac, custom);
  EXPECT_NE(der2, der);
  EXPECT_EQ(decode_der(der2, custom), pac);
  EXPECT_THROW(decode_der(der2), Error);
}

TEST(Der, StrictDecodeErrors) {
  Fixture f;
  auto der = encode_der(f.pac());
  EXPECT_EQ(code_of([&] { decode_der(ByteView(der).first(der.size() - 1)); }), Errc::kDerTruncated);
  auto trailing = der;
  trailing.push_back(0);
  EXPECT_EQ(code_of([&] { decode_der(trailing); }), Errc::kDerTrailingBytes);
  auto bad_tag = der;
  bad_tag[0] = 0x31;
  EXPECT_EQ(code_of([&] { decode_der(bad_tag); }), Errc::kDerBadTag);
  // Long-form length where the short form fits.
  EXPECT_EQ(code_of([] { decode_der(from_hex("3081020500")); }), Errc::kDerNonMinimalLength);
}

TEST(Der, OpenSslParsesOutput) {
  Fixture f;
  for (const auto& pac : {f.pac(), f.pac(DeltaMode{Bytes(20, 7), complist::diff(f.list, [&] {
                                                     auto l = f.list;
                                                     l.components[0].serial = "9";
                                                     return l;
                                                   }())})}) {
    auto der = encode_der(pac);
    BIO* mem = BIO_new(BIO_s_mem());
    EXPECT_EQ(ASN1_parse_dump(mem, der.data(), static_cast<long>(der.size()), 0, 0), 1);
    char* text = nullptr;
    long n = BIO_get_mem_data(mem, &text);
    std::string dump(text, static_cast<std::size_t>(n));
    BIO_free(mem);
    EXPECT_NE(dump.find("UTF8STRING"), std::string::npos);
    EXPECT_EQ(dump.find("Error"), std::string::npos);
  }
}

TEST(Der, DumpShowsComponentsAndHolder) {
  Fixture f;
  auto pac = f.pac();
  std::ostringstream out;
  der::dump(encode_der(pac), out, [](const std::string& oid) { return Profile::project_default().name_of(oid); });
  auto text = out.str();
  EXPECT_NE(text.find("componentIdentifiers"), std::string::npos);
  EXPECT_NE(text.find(to_hex(pac.tbs.holder_ek_digest)), std::string::npos);
  std::size_t registry = 0;
  for (auto p = text.find("TCG Component Class Registry"); p != std::string::npos;
       p = text.find("TCG Component Class Registry", p + 1)) {
    ++registry;
  }
  EXPECT_EQ(registry, 10u);
}

TEST(Delta, ApplyDeltasFollowsChain) {
  Fixture f;
  auto base = f.pac();
  auto mid = f.list;
  mid.components[0].serial = "changed";
  auto d1 = sign_pac(build_tbs(mid, f.log.ek, f.policy, DeltaMode{base.tbs.serial_number, complist::diff(f.list, mid)},
                               f.key.algorithm()),
                     f.key);
  auto last = mid;
  last.components.pop_back();
  auto d2 = sign_pac(build_tbs(last, f.log.ek, f.policy, DeltaMode{d1.tbs.serial_number, complist::diff(mid, last)},
                               f.key.algorithm()),
                     f.key);
  std::vector<PlatformAttributeCertificate> chain{d1, d2};
  auto expected = last;
  complist::canonicalize(expected);
  EXPECT_EQ(apply_deltas(base, chain), expected);
  EXPECT_EQ(decode_der(encode_der(d2)), d2);

  std::vector<PlatformAttributeCertificate> skipped{d2};
  EXPECT_EQ(code_of([&] { apply_deltas(base, skipped); }), Errc::kDanglingBaseRef);
  EXPECT_EQ(apply_deltas(base, {}), base.component_list());
}

TEST(Der, RandomizedRoundTrip) {
  std::mt19937_64 rng(21);
  auto key = pac::testing::test_issuer_key();
  for (int i = 0; i < 100; ++i) {
    auto s = device::new_device(device::randomized_spec(rng()));
    auto log = measure::measure(s);
    auto list = complist::parse_log(measure::render_entries(log.entries), s.platform);
    IssuerPolicy policy;
    policy.not_before = static_cast<std::int64_t>(rng() % 4000000000ULL);
    policy.validity_seconds = 1 + static_cast<std::int64_t>(rng() % 1000000000ULL);
    auto pac = sign_pac(build_tbs(list, log.ek, policy, BaseMode{}, key.algorithm()), key);
    EXPECT_EQ(decode_der(encode_der(pac)), pac);
  }
}

}  // namespace
}  // namespace pac::certgen
