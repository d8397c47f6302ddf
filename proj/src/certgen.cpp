// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include "pac/certgen.hpp"

#include <algorithm>

#include "pac/der.hpp"
#include "pac/error.hpp"

namespace pac::certgen {

namespace {

constexpr std::string_view kOidCommonName = "2.5.4.3";
constexpr std::int64_t kVersionV2 = 1;  // AttCertVersion v2(1)
constexpr std::int64_t kDigestOfPublicKey = 0;

using der::Reader;
using der::Writer;
namespace tag = der::tag;

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::kDerMalformed, what); }

void write_algorithm(Writer& w, crypto::SignatureAlgorithm alg) {
  w.sequence([&](Writer& s) {
    s.oid(crypto::oid_of(alg));
    if (alg == crypto::SignatureAlgorithm::kRsa2048Pkcs1v15Sha256) s.null();
  });
}

crypto::SignatureAlgorithm read_algorithm(Reader& r) {
  auto s = r.sequence();
  auto oid = s.oid();
  auto alg = crypto::algorithm_from_oid(oid);
  if (!alg) malformed("unsupported signature algorithm " + oid);
  if (*alg == crypto::SignatureAlgorithm::kRsa2048Pkcs1v15Sha256) s.null();
  s.finish();
  return *alg;
}

void write_name(Writer& w, const std::string& common_name) {
  w.sequence([&](Writer& name) {
    name.set_of([&](Writer& rdn) {
      rdn.sequence([&](Writer& atv) { atv.oid(kOidCommonName).utf8(common_name); });
    });
  });
}

std::string read_name(Reader& r) {
  auto name = r.sequence();
  auto rdns = name.set_of();
  name.finish();
  if (rdns.size() != 1) malformed("issuer name must hold a single attribute");
  Reader rdn(rdns[0].whole);
  auto atv = rdn.sequence();
  if (atv.oid() != kOidCommonName) malformed("issuer name must be a commonName");
  auto cn = atv.utf8();
  atv.finish();
  return cn;
}

void write_component(Writer& w, const complist::ComponentIdentifier& c) {
  w.sequence([&](Writer& s) {
    s.sequence([&](Writer& cls) {
      cls.utf8(c.component_class.registry).octet_string(be_bytes(c.component_class.value, 4));
    });
    s.utf8(c.manufacturer).utf8(c.model);
    s.implicit_primitive(0, as_bytes(c.serial));
    if (c.revision) s.implicit_primitive(1, as_bytes(*c.revision));
    if (c.field_replaceable) {
      const std::uint8_t yes = 0xff;
      s.implicit_primitive(2, ByteView(&yes, 1));
    }
  });
}

std::string read_implicit_utf8(Reader& r, unsigned number) {
  auto t = r.expect(tag::context(number, false));
  std::string s(reinterpret_cast<const char*>(t.content.data()), t.content.size());
  if (!der::is_valid_utf8(s)) malformed("invalid UTF-8");
  return s;
}

complist::ComponentIdentifier read_component(Reader& r) {
  complist::ComponentIdentifier c;
  auto s = r.sequence();
  {
    auto cls = s.sequence();
    c.component_class.registry = cls.utf8();
    auto value = cls.octet_string();
    if (value.size() != 4) malformed("component class must be 4 bytes");
    c.component_class.value = (std::uint32_t{value[0]} << 24) | (std::uint32_t{value[1]} << 16) |
                              (std::uint32_t{value[2]} << 8) | value[3];
    cls.finish();
  }
  c.manufacturer = s.utf8();
  c.model = s.utf8();
  c.serial = read_implicit_utf8(s, 0);
  if (s.next_is(tag::context(1, false))) c.revision = read_implicit_utf8(s, 1);
  if (s.next_is(tag::context(2, false))) {
    auto t = s.expect(tag::context(2, false));
    // DEFAULT FALSE: only TRUE is ever encoded.
    if (t.content.size() != 1 || t.content[0] != 0xff) malformed("fieldReplaceable must be encoded TRUE");
    c.field_replaceable = true;
  }
  s.finish();
  return c;
}

void write_change(Writer& w, const complist::ComponentChange& ch) {
  w.sequence([&](Writer& s) {
    s.enumerated(static_cast<std::int64_t>(ch.kind));
    write_component(s, ch.identifier);
    if (ch.old_serial) s.implicit_primitive(0, as_bytes(*ch.old_serial));
    if (ch.new_serial) s.implicit_primitive(1, as_bytes(*ch.new_serial));
  });
}

complist::ComponentChange read_change(Reader& r) {
  complist::ComponentChange ch;
  auto s = r.sequence();
  auto kind = s.enumerated();
  if (kind < 0 || kind > 2) malformed("unknown change kind");
  ch.kind = static_cast<complist::ChangeKind>(kind);
  ch.identifier = read_component(s);
  if (s.next_is(tag::context(0, false))) ch.old_serial = read_implicit_utf8(s, 0);
  if (s.next_is(tag::context(1, false))) ch.new_serial = read_implicit_utf8(s, 1);
  s.finish();
  return ch;
}

void write_attribute(Writer& w, const std::string& oid, const Writer::Body& value) {
  w.sequence([&](Writer& a) {
    a.oid(oid);
    a.set_of(value);
  });
}

// Reads one Attribute of the expected type and returns a reader over its
// single value.
Reader read_attribute(Reader& attrs, const std::string& oid, Bytes& holder) {
  auto a = attrs.sequence();
  auto got = a.oid();
  if (got != oid) malformed("expected attribute " + oid + ", found " + got);
  auto values = a.set_of();
  a.finish();
  if (values.size() != 1) malformed("attribute " + oid + " must carry exactly one value");
  holder.assign(values[0].whole.begin(), values[0].whole.end());
  return Reader(holder);
}

bool next_attribute_is(const Reader& attrs, const std::string& oid) {
  if (attrs.empty()) return false;
  Reader probe = attrs;
  try {
    auto a = probe.sequence();
    return a.oid() == oid;
  } catch (const Error&) {
    return false;
  }
}

std::string read_utf8_attribute(Reader& attrs, const std::string& oid) {
  Bytes holder;
  auto v = read_attribute(attrs, oid, holder);
  auto s = v.utf8();
  v.finish();
  return s;
}

}  // namespace

// ---------------------------------------------------------------- profile

const Profile& Profile::project_default() {
  static const Profile p = under_arc(std::string(kProjectArc));
  return p;
}

Profile Profile::under_arc(const std::string& arc) {
  Profile p;
  p.platform_manufacturer = arc + ".1";
  p.platform_manufacturer_id = arc + ".2";
  p.platform_model = arc + ".3";
  p.platform_version = arc + ".4";
  p.platform_serial = arc + ".5";
  p.component_identifiers = arc + ".6";
  p.component_changes = arc + ".7";
  p.ek_reference = arc + ".8";
  p.base_certificate_ref = arc + ".9";
  p.policy_text = arc + ".10";
  return p;
}

std::string Profile::name_of(const std::string& oid) const {
  if (oid == platform_manufacturer) return "platformManufacturer";
  if (oid == platform_manufacturer_id) return "platformManufacturerId";
  if (oid == platform_model) return "platformModel";
  if (oid == platform_version) return "platformVersion";
  if (oid == platform_serial) return "platformSerial";
  if (oid == component_identifiers) return "componentIdentifiers";
  if (oid == component_changes) return "componentChanges";
  if (oid == ek_reference) return "ekReference";
  if (oid == base_certificate_ref) return "baseCertificateRef";
  if (oid == policy_text) return "policyText";
  if (oid == kOidCommonName) return "commonName";
  if (oid == crypto::kOidSha256) return "sha256";
  if (oid == crypto::kOidEcdsaWithSha256) return "ecdsa-with-SHA256";
  if (oid == crypto::kOidSha256WithRsa) return "sha256WithRSAEncryption";
  return {};
}

// ---------------------------------------------------------------- build / sign

Bytes derive_serial(const complist::ComponentList& list, ByteView ek_public, const Mode& mode) {
  Bytes material = to_bytes(complist::to_canonical_json(list));
  append(material, ek_public);
  if (const auto* delta = std::get_if<DeltaMode>(&mode)) {
    append(material, as_bytes("delta"));
    append(material, delta->base_serial);
  } else {
    append(material, as_bytes("base"));
  }
  auto digest = crypto::sha256(material);
  return Bytes(digest.begin(), digest.begin() + kSerialSize);
}

TbsPac build_tbs(const complist::ComponentList& list, const measure::EkReference& ek,
                 const IssuerPolicy& policy, const Mode& mode, crypto::SignatureAlgorithm algorithm) {
  if (policy.validity_seconds <= 0) throw Error(Errc::kInvalidArgument, "validity window must be positive");
  complist::ComponentList canonical = list;
  complist::canonicalize(canonical);

  TbsPac tbs;
  tbs.holder_ek_digest = crypto::sha256(ek.ek_public);
  tbs.ek_public = ek.ek_public;
  tbs.ek_binding_sig = ek.binding_sig;
  tbs.issuer = policy.issuer_name;
  tbs.not_before = policy.not_before;
  tbs.not_after = policy.not_before + policy.validity_seconds;
  tbs.platform = canonical.platform;
  tbs.policy_text = policy.policy_text;
  tbs.signature_algorithm = algorithm;

  if (const auto* delta = std::get_if<DeltaMode>(&mode)) {
    if (delta->base_serial.empty()) throw Error(Errc::kMissingBaseRef, "delta certificate needs a base serial");
    if (delta->changes.empty()) throw Error(Errc::kEmptyChanges, "delta certificate needs at least one change");
    tbs.kind = PacKind::kDelta;
    tbs.changes = delta->changes;
    tbs.base_certificate_ref = delta->base_serial;
  } else {
    if (canonical.components.empty()) {
      throw Error(Errc::kEmptyComponentList, "base certificate needs at least one component");
    }
    tbs.kind = PacKind::kBase;
    tbs.components = canonical.components;
  }
  tbs.serial_number = derive_serial(canonical, ek.ek_public, mode);
  return tbs;
}

PlatformAttributeCertificate sign_pac(const TbsPac& tbs, const crypto::SigningKey& key) {
  if (key.algorithm() != tbs.signature_algorithm) {
    throw Error(Errc::kKeyMismatch, "key algorithm " + std::string(crypto::name_of(key.algorithm())) +
                                        " does not match the TBS algorithm " +
                                        std::string(crypto::name_of(tbs.signature_algorithm)));
  }
  auto problems = structural_problems(tbs);
  if (!problems.empty()) throw Error(Errc::kInvalidArgument, "refusing to sign: " + problems.front());
  PlatformAttributeCertificate pac;
  pac.tbs = tbs;
  pac.signature = key.sign(encode_tbs(tbs));
  return pac;
}

// ---------------------------------------------------------------- DER

Bytes encode_tbs(const TbsPac& tbs, const Profile& profile) {
  return der::encode([&](Writer& w) {
    w.sequence([&](Writer& info) {
      info.integer(tbs.version - 1);
      // Holder: objectDigestInfo [2] over the EK public key.
      info.sequence([&](Writer& holder) {
        holder.explicit_tag(2, [&](Writer& odi) {
          odi.enumerated(kDigestOfPublicKey);
          odi.sequence([&](Writer& alg) { alg.oid(crypto::kOidSha256); });
          odi.bit_string(tbs.holder_ek_digest);
        });
      });
      // AttCertIssuer v2Form [0] { GeneralNames { directoryName [4] Name } }
      info.explicit_tag(0, [&](Writer& v2) {
        v2.sequence([&](Writer& names) { names.explicit_tag(4, [&](Writer& dn) { write_name(dn, tbs.issuer); }); });
      });
      write_algorithm(info, tbs.signature_algorithm);
      info.unsigned_integer(tbs.serial_number);
      info.sequence([&](Writer& v) { v.generalized_time(tbs.not_before).generalized_time(tbs.not_after); });
      info.sequence([&](Writer& attrs) {
        write_attribute(attrs, profile.platform_manufacturer, [&](Writer& v) { v.utf8(tbs.platform.manufacturer); });
        if (tbs.platform.manufacturer_id) {
          write_attribute(attrs, profile.platform_manufacturer_id,
                          [&](Writer& v) { v.utf8(*tbs.platform.manufacturer_id); });
        }
        write_attribute(attrs, profile.platform_model, [&](Writer& v) { v.utf8(tbs.platform.model); });
        write_attribute(attrs, profile.platform_version, [&](Writer& v) { v.utf8(tbs.platform.version); });
        write_attribute(attrs, profile.platform_serial, [&](Writer& v) { v.utf8(tbs.platform.serial); });
        if (tbs.kind == PacKind::kBase) {
          write_attribute(attrs, profile.component_identifiers, [&](Writer& v) {
            v.sequence([&](Writer& list) {
              for (const auto& c : tbs.components) write_component(list, c);
            });
          });
        } else {
          write_attribute(attrs, profile.component_changes, [&](Writer& v) {
            v.sequence([&](Writer& list) {
              for (const auto& ch : tbs.changes) write_change(list, ch);
            });
          });
          write_attribute(attrs, profile.base_certificate_ref,
                          [&](Writer& v) { v.unsigned_integer(tbs.base_certificate_ref.value_or(Bytes{})); });
        }
        write_attribute(attrs, profile.ek_reference, [&](Writer& v) {
          v.sequence([&](Writer& ek) { ek.octet_string(tbs.ek_public).octet_string(tbs.ek_binding_sig); });
        });
        write_attribute(attrs, profile.policy_text, [&](Writer& v) { v.utf8(tbs.policy_text); });
      });
    });
  });
}

Bytes encode_der(const PlatformAttributeCertificate& pac, const Profile& profile) {
  Bytes tbs = encode_tbs(pac.tbs, profile);
  return der::encode([&](Writer& w) {
    w.sequence([&](Writer& cert) {
      cert.raw(tbs);
      write_algorithm(cert, pac.tbs.signature_algorithm);
      cert.bit_string(pac.signature);
    });
  });
}

namespace {

Bytes left_pad(Bytes magnitude, std::size_t width) {
  if (magnitude.size() > width) malformed("serial number wider than 20 bytes");
  Bytes out(width - magnitude.size(), 0);
  append(out, magnitude);
  return out;
}

TbsPac read_tbs(Reader& info, const Profile& profile) {
  TbsPac tbs;
  if (info.integer() != kVersionV2) malformed("unsupported attribute certificate version");
  tbs.version = 2;
  {
    auto holder = info.sequence();
    auto odi = holder.explicit_tag(2);
    if (odi.enumerated() != kDigestOfPublicKey) malformed("holder digest must cover a public key");
    auto alg = odi.sequence();
    if (alg.oid() != crypto::kOidSha256) malformed("holder digest must be SHA-256");
    alg.finish();
    auto digest = odi.bit_string();
    if (digest.size() != tbs.holder_ek_digest.size()) malformed("holder digest must be 32 bytes");
    std::copy(digest.begin(), digest.end(), tbs.holder_ek_digest.begin());
    odi.finish();
    holder.finish();
  }
  {
    auto v2 = info.explicit_tag(0);
    auto names = v2.sequence();
    auto dn = names.explicit_tag(4);
    tbs.issuer = read_name(dn);
    dn.finish();
    names.finish();
    v2.finish();
  }
  tbs.signature_algorithm = read_algorithm(info);
  tbs.serial_number = left_pad(info.unsigned_integer(), kSerialSize);
  {
    auto v = info.sequence();
    tbs.not_before = v.generalized_time();
    tbs.not_after = v.generalized_time();
    v.finish();
  }
  auto attrs = info.sequence();
  tbs.platform.manufacturer = read_utf8_attribute(attrs, profile.platform_manufacturer);
  if (next_attribute_is(attrs, profile.platform_manufacturer_id)) {
    tbs.platform.manufacturer_id = read_utf8_attribute(attrs, profile.platform_manufacturer_id);
  }
  tbs.platform.model = read_utf8_attribute(attrs, profile.platform_model);
  tbs.platform.version = read_utf8_attribute(attrs, profile.platform_version);
  tbs.platform.serial = read_utf8_attribute(attrs, profile.platform_serial);
  Bytes holder;
  if (next_attribute_is(attrs, profile.component_identifiers)) {
    tbs.kind = PacKind::kBase;
    auto v = read_attribute(attrs, profile.component_identifiers, holder);
    auto list = v.sequence();
    while (!list.empty()) tbs.components.push_back(read_component(list));
    v.finish();
  } else {
    tbs.kind = PacKind::kDelta;
    {
      auto v = read_attribute(attrs, profile.component_changes, holder);
      auto list = v.sequence();
      while (!list.empty()) tbs.changes.push_back(read_change(list));
      v.finish();
    }
    {
      auto v = read_attribute(attrs, profile.base_certificate_ref, holder);
      tbs.base_certificate_ref = left_pad(v.unsigned_integer(), kSerialSize);
      v.finish();
    }
  }
  {
    auto v = read_attribute(attrs, profile.ek_reference, holder);
    auto ek = v.sequence();
    tbs.ek_public = ek.octet_string();
    tbs.ek_binding_sig = ek.octet_string();
    ek.finish();
    v.finish();
  }
  tbs.policy_text = read_utf8_attribute(attrs, profile.policy_text);
  attrs.finish();
  info.finish();
  return tbs;
}

}  // namespace

PlatformAttributeCertificate decode_der(ByteView der, const Profile& profile) {
  Reader top(der);
  auto cert = top.sequence();
  top.finish();
  auto tbs_tlv = cert.expect(tag::kSequence);
  Reader info(tbs_tlv.content);
  PlatformAttributeCertificate pac;
  pac.tbs = read_tbs(info, profile);
  auto outer_alg = read_algorithm(cert);
  if (outer_alg != pac.tbs.signature_algorithm) {
    malformed("outer signature algorithm differs from the TBS algorithm");
  }
  pac.signature = cert.bit_string();
  cert.finish();
  // Anything the strict reader let through must still re-encode identically.
  Bytes reencoded = encode_tbs(pac.tbs, profile);
  if (!std::equal(reencoded.begin(), reencoded.end(), tbs_tlv.whole.begin(), tbs_tlv.whole.end())) {
    malformed("TBS is not in canonical form");
  }
  return pac;
}

// ---------------------------------------------------------------- validation

std::string_view to_string(Check check) {
  switch (check) {
    case Check::kSignatureInvalid: return "SignatureInvalid";
    case Check::kAlgorithmMismatch: return "AlgorithmMismatch";
    case Check::kNotYetValid: return "NotYetValid";
    case Check::kExpired: return "Expired";
    case Check::kStructure: return "Structure";
  }
  return "Structure";
}

bool ValidationResult::has(Check check) const {
  return std::any_of(failures.begin(), failures.end(), [&](const Finding& f) { return f.check == check; });
}

std::vector<std::string> structural_problems(const TbsPac& tbs) {
  std::vector<std::string> out;
  if (tbs.version != 2) out.push_back("version must be v2");
  if (tbs.not_before >= tbs.not_after) out.push_back("not_before must precede not_after");
  if (tbs.serial_number.size() != kSerialSize) out.push_back("serial number must be 20 bytes");
  if (crypto::sha256(tbs.ek_public) != tbs.holder_ek_digest) {
    out.push_back("holder digest does not match the embedded EK public key");
  }
  if (tbs.kind == PacKind::kBase) {
    if (tbs.components.empty()) out.push_back("base certificate has no components");
    if (!tbs.changes.empty() || tbs.base_certificate_ref) out.push_back("base certificate carries delta fields");
    complist::ComponentList list{tbs.platform, tbs.components};
    if (!complist::is_canonical(list)) {
      out.push_back("components are not in canonical order");
    } else {
      for (std::size_t i = 1; i < tbs.components.size(); ++i) {
        const auto& a = tbs.components[i - 1];
        const auto& b = tbs.components[i];
        if (a.component_class.value == b.component_class.value && a.serial == b.serial) {
          out.push_back("duplicate component");
          break;
        }
      }
    }
  } else {
    if (!tbs.base_certificate_ref) out.push_back("delta certificate lacks a base reference");
    if (tbs.changes.empty()) out.push_back("delta certificate has no changes");
    if (!tbs.components.empty()) out.push_back("delta certificate carries a component list");
  }
  return out;
}

ValidationResult validate_pac(const PlatformAttributeCertificate& pac, const crypto::PublicKey& issuer_public,
                              std::int64_t now) {
  ValidationResult result;
  const auto& tbs = pac.tbs;
  if (issuer_public.algorithm() != tbs.signature_algorithm) {
    result.failures.push_back({Check::kAlgorithmMismatch, "issuer key does not use the certificate's algorithm"});
    result.failures.push_back({Check::kSignatureInvalid, "signature cannot be checked with this key"});
  } else {
    bool verified = false;
    try {
      verified = issuer_public.verify(encode_tbs(tbs), pac.signature);
    } catch (const Error&) {
      verified = false;
    }
    if (!verified) result.failures.push_back({Check::kSignatureInvalid, "signature does not verify"});
  }
  if (now < tbs.not_before) {
    result.failures.push_back({Check::kNotYetValid, "valid from " + der::format_time(tbs.not_before)});
  }
  if (now > tbs.not_after) {
    result.failures.push_back({Check::kExpired, "expired at " + der::format_time(tbs.not_after)});
  }
  for (auto& p : structural_problems(tbs)) result.failures.push_back({Check::kStructure, std::move(p)});
  return result;
}

complist::ComponentList apply_deltas(const PlatformAttributeCertificate& base,
                                     std::span<const PlatformAttributeCertificate> deltas) {
  if (base.tbs.kind != PacKind::kBase) throw Error(Errc::kInvalidArgument, "first certificate must be a base");
  complist::ComponentList list = base.component_list();
  const Bytes* previous = &base.tbs.serial_number;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto& d = deltas[i].tbs;
    if (d.kind != PacKind::kDelta) {
      throw Error(Errc::kInvalidArgument, "certificate " + std::to_string(i) + " in the delta chain is not a delta");
    }
    if (!d.base_certificate_ref || *d.base_certificate_ref != *previous) {
      throw Error(Errc::kDanglingBaseRef, "delta " + std::to_string(i) + " references " +
                                              (d.base_certificate_ref ? to_hex(*d.base_certificate_ref) : "nothing") +
                                              ", expected " + to_hex(*previous));
    }
    list = complist::apply_changes(std::move(list), d.changes);
    list.platform = d.platform;
    previous = &d.serial_number;
  }
  return list;
}

}  // namespace pac::certgen
