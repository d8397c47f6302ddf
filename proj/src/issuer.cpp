// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include "pac/issuer.hpp"

#include <algorithm>

#include "pac/der.hpp"
#include "pac/error.hpp"

namespace pac::certgen {

namespace {

constexpr std::string_view kOidCommonName = "2.5.4.3";
constexpr std::string_view kOidBasicConstraints = "2.5.29.19";
constexpr std::int64_t kVersionV3 = 2;

using der::Reader;
using der::Writer;

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::kDerMalformed, what); }

void write_algorithm(Writer& w, crypto::SignatureAlgorithm alg) {
  w.sequence([&](Writer& s) {
    s.oid(crypto::oid_of(alg));
    if (alg == crypto::SignatureAlgorithm::kRsa2048Pkcs1v15Sha256) s.null();
  });
}

crypto::SignatureAlgorithm read_algorithm(Reader& r) {
  auto s = r.sequence();
  auto alg = crypto::algorithm_from_oid(s.oid());
  if (!alg) malformed("unsupported signature algorithm");
  if (*alg == crypto::SignatureAlgorithm::kRsa2048Pkcs1v15Sha256) s.null();
  s.finish();
  return *alg;
}

void write_name(Writer& w, const std::string& cn) {
  w.sequence([&](Writer& name) {
    name.set_of([&](Writer& rdn) { rdn.sequence([&](Writer& atv) { atv.oid(kOidCommonName).utf8(cn); }); });
  });
}

std::string read_name(Reader& r) {
  auto name = r.sequence();
  auto rdns = name.set_of();
  name.finish();
  if (rdns.size() != 1) malformed("name must hold a single attribute");
  Reader rdn(rdns[0].whole);
  auto atv = rdn.sequence();
  if (atv.oid() != kOidCommonName) malformed("name must be a commonName");
  auto cn = atv.utf8();
  atv.finish();
  return cn;
}

Bytes ca_extensions() {
  // basicConstraints, critical, cA = TRUE
  Bytes value = der::encode([](Writer& w) { w.sequence([](Writer& s) { s.boolean(true); }); });
  return der::encode([&](Writer& w) {
    w.explicit_tag(3, [&](Writer& e) {
      e.sequence([&](Writer& list) {
        list.sequence([&](Writer& ext) { ext.oid(kOidBasicConstraints).boolean(true).octet_string(value); });
      });
    });
  });
}

}  // namespace

Bytes encode_tbs_certificate(const IssuerCertificate& c) {
  return der::encode([&](Writer& w) {
    w.sequence([&](Writer& tbs) {
      tbs.explicit_tag(0, [](Writer& v) { v.integer(kVersionV3); });
      tbs.unsigned_integer(c.serial_number);
      write_algorithm(tbs, c.signature_algorithm);
      write_name(tbs, c.issuer);
      tbs.sequence([&](Writer& v) { v.time(c.not_before).time(c.not_after); });
      write_name(tbs, c.subject);
      tbs.raw(c.subject_spki);
      tbs.raw(ca_extensions());
    });
  });
}

Bytes encode_der(const IssuerCertificate& c) {
  Bytes tbs = encode_tbs_certificate(c);
  return der::encode([&](Writer& w) {
    w.sequence([&](Writer& cert) {
      cert.raw(tbs);
      write_algorithm(cert, c.signature_algorithm);
      cert.bit_string(c.signature);
    });
  });
}

IssuerCertificate decode_issuer_der(ByteView der) {
  Reader top(der);
  auto cert = top.sequence();
  top.finish();
  auto tbs_tlv = cert.expect(der::tag::kSequence);
  Reader tbs(tbs_tlv.content);
  IssuerCertificate c;
  {
    auto v = tbs.explicit_tag(0);
    if (v.integer() != kVersionV3) malformed("expected an X.509 v3 certificate");
    v.finish();
  }
  c.serial_number = tbs.unsigned_integer();
  c.signature_algorithm = read_algorithm(tbs);
  c.issuer = read_name(tbs);
  {
    auto v = tbs.sequence();
    c.not_before = v.time();
    c.not_after = v.time();
    v.finish();
  }
  c.subject = read_name(tbs);
  auto spki = tbs.expect(der::tag::kSequence);
  c.subject_spki.assign(spki.whole.begin(), spki.whole.end());
  auto ext = tbs.read_any();
  Bytes expected_ext = ca_extensions();
  if (!std::equal(ext.whole.begin(), ext.whole.end(), expected_ext.begin(), expected_ext.end())) {
    malformed("issuer certificates must carry exactly basicConstraints cA=TRUE");
  }
  tbs.finish();
  if (read_algorithm(cert) != c.signature_algorithm) malformed("outer algorithm differs from TBS algorithm");
  c.signature = cert.bit_string();
  cert.finish();
  Bytes reencoded = encode_tbs_certificate(c);
  if (!std::equal(reencoded.begin(), reencoded.end(), tbs_tlv.whole.begin(), tbs_tlv.whole.end())) {
    malformed("TBSCertificate is not canonical");
  }
  return c;
}

IssuerCertificate issue_ca_certificate(const std::string& subject, const crypto::PublicKey& subject_key,
                                       const std::string& issuer, const crypto::SigningKey& issuer_key,
                                       std::int64_t not_before, std::int64_t validity_seconds) {
  IssuerCertificate c;
  c.issuer = issuer;
  c.subject = subject;
  c.not_before = not_before;
  c.not_after = not_before + validity_seconds;
  c.subject_spki = subject_key.spki();
  c.signature_algorithm = issuer_key.algorithm();
  Bytes material = to_bytes(issuer + "\n" + subject + "\n");
  append(material, c.subject_spki);
  auto digest = crypto::sha256(material);
  c.serial_number.assign(digest.begin(), digest.begin() + 16);
  c.serial_number[0] &= 0x7f;  // positive, fixed width
  c.serial_number[0] |= 0x40;
  c.signature = issuer_key.sign(encode_tbs_certificate(c));
  return c;
}

IssuerCertificate self_signed_anchor(const std::string& name, const crypto::SigningKey& key,
                                     std::int64_t not_before, std::int64_t validity_seconds) {
  return issue_ca_certificate(name, key.public_key(), name, key, not_before, validity_seconds);
}

std::string_view to_string(ChainProblem problem) {
  switch (problem) {
    case ChainProblem::kBrokenChain: return "BrokenChain";
    case ChainProblem::kNotYetValid: return "NotYetValid";
    case ChainProblem::kExpired: return "Expired";
    case ChainProblem::kInvalidLeaf: return "InvalidLeaf";
  }
  return "BrokenChain";
}

ChainResult verify_chain(const PlatformAttributeCertificate& leaf, std::span<const IssuerCertificate> intermediates,
                         const IssuerCertificate& trust_anchor, std::int64_t now) {
  ChainResult result;
  std::vector<const IssuerCertificate*> path;
  for (const auto& c : intermediates) path.push_back(&c);
  path.push_back(&trust_anchor);

  auto check_window = [&](std::size_t depth, std::int64_t nb, std::int64_t na) {
    if (now < nb) result.failures.push_back({depth, ChainProblem::kNotYetValid, "valid from " + der::format_time(nb)});
    if (now > na) result.failures.push_back({depth, ChainProblem::kExpired, "expired at " + der::format_time(na)});
  };

  // Leaf: issued by path[0].
  {
    const auto& parent = *path[0];
    if (leaf.tbs.issuer != parent.subject) {
      result.failures.push_back({0, ChainProblem::kBrokenChain,
                                 "issuer '" + leaf.tbs.issuer + "' does not match '" + parent.subject + "'"});
    } else {
      auto v = validate_pac(leaf, parent.subject_key(), now);
      for (const auto& f : v.failures) {
        switch (f.check) {
          case Check::kSignatureInvalid:
          case Check::kAlgorithmMismatch:
            result.failures.push_back({0, ChainProblem::kBrokenChain, f.detail});
            break;
          case Check::kStructure:
            result.failures.push_back({0, ChainProblem::kInvalidLeaf, f.detail});
            break;
          case Check::kNotYetValid:
          case Check::kExpired:
            break;  // reported below
        }
      }
    }
    check_window(0, leaf.tbs.not_before, leaf.tbs.not_after);
  }

  // Issuer certificates; the anchor verifies against itself.
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& cert = *path[i];
    const auto& parent = i + 1 < path.size() ? *path[i + 1] : trust_anchor;
    const std::size_t depth = i + 1;
    bool linked = cert.issuer == parent.subject;
    if (linked) {
      try {
        auto key = parent.subject_key();
        linked = key.algorithm() == cert.signature_algorithm &&
                 key.verify(encode_tbs_certificate(cert), cert.signature);
      } catch (const Error&) {
        linked = false;
      }
    }
    if (!linked) {
      result.failures.push_back({depth, ChainProblem::kBrokenChain,
                                 "'" + cert.subject + "' is not signed by '" + parent.subject + "'"});
    }
    check_window(depth, cert.not_before, cert.not_after);
  }
  return result;
}

}  // namespace pac::certgen
