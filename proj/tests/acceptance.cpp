// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <openssl/asn1.h>
#include <openssl/bio.h>
#include <openssl/x509.h>

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "pac/der.hpp"
#include "pac/error.hpp"
#include "pac/issuer.hpp"
#include "pac/net.hpp"
#include "support.hpp"

namespace {

using namespace pac;
using pac::testing::kNow;
using pac::testing::Verifier;
using verify::Approach;
using verify::Verdict;
using Clock = std::chrono::steady_clock;

struct Failure {
  std::string what;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw Failure{what};
}

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// (class, model) pairs named by component findings.
std::set<std::pair<std::uint32_t, std::string>> flagged(const verify::VerificationReport& r) {
  std::set<std::pair<std::uint32_t, std::string>> out;
  for (const auto& f : r.findings) {
    if (f.change) out.insert({f.change->identifier.component_class.value, f.change->identifier.model});
  }
  return out;
}

const std::pair<std::uint32_t, std::string> kGpio{measure::component_class::kGpio, "Pins/Levels"};
const std::pair<std::uint32_t, std::string> kFirmware{measure::component_class::kFirmware, "Firmware SHA256"};
const std::pair<std::uint32_t, std::string> kElf{measure::component_class::kSoftware, "ELF SHA256"};

std::string t1_gpio() {
  auto t0 = Clock::now();
  Verifier v;
  auto clean = pac::testing::reference_device();
  v.provision(clean);
  auto tampered = device::tamper_gpio(device::tamper_gpio(clean, 2, 1), 4, 1);

  net::ProverServer server(tampered, {"127.0.0.1", 0});
  std::thread prover([&] { server.serve(); });
  struct Join {
    net::ProverServer& s;
    std::thread& t;
    ~Join() {
      s.stop();
      t.join();
    }
  } join{server, prover};

  net::TcpProverChannel channel({"127.0.0.1", server.port()});
  auto id = clean.platform.serial;
  auto sig = verify::run_verification(channel, v.store, id, v.issuer, {Approach::kSignature, {}, kNow});
  auto comp = verify::run_verification(channel, v.store, id, v.issuer, {Approach::kComponent, {}, kNow});
  double elapsed = ms_since(t0);
  require(sig.overall == Verdict::kTampered, "approach 1 did not report TAMPERED");
  require(sig.findings.size() == 1 && sig.findings[0].kind == verify::Finding::Kind::kSignatureMismatch,
          "approach 1 finding is not a single signature mismatch");
  require(comp.overall == Verdict::kTampered, "approach 2 did not report TAMPERED");
  require(flagged(comp) == std::set{kGpio}, "approach 2 flagged something other than 0x000E0000");
  require(elapsed < 5000, "took " + std::to_string(elapsed) + " ms");
  std::ostringstream out;
  out << "both approaches TAMPERED over TCP, findings {000E0000}, " << static_cast<int>(elapsed) << " ms";
  return out.str();
}

std::string t4_firmware() {
  Verifier v;
  auto clean = pac::testing::reference_device();
  v.provision(clean);
  std::mt19937_64 rng(4);
  std::set<std::size_t> offsets;
  while (offsets.size() < 50) offsets.insert(rng() % clean.firmware_image.size());
  for (auto off : offsets) {
    std::uint8_t patch = clean.firmware_image[off] ^ static_cast<std::uint8_t>(1 + rng() % 255);
    auto t = device::tamper_firmware(clean, off, std::vector<std::uint8_t>{patch});
    auto comp = v.attest(t, Approach::kComponent);
    auto sig = v.attest(t, Approach::kSignature);
    require(comp.overall == Verdict::kTampered && sig.overall == Verdict::kTampered,
            "offset " + std::to_string(off) + " not detected");
    require(flagged(comp) == std::set{kFirmware}, "offset " + std::to_string(off) + " flagged other classes");
  }
  return "50/50 one-byte patches flagged exactly 00130003";
}

std::string t5_elf() {
  Verifier v;
  auto clean = pac::testing::reference_device();
  v.provision(clean);
  auto t = device::tamper_elf(clean, device::sample_image("injected section", 512));
  auto comp = v.attest(t, Approach::kComponent);
  auto sig = v.attest(t, Approach::kSignature);
  require(comp.overall == Verdict::kTampered && sig.overall == Verdict::kTampered, "ELF append not detected");
  require(flagged(comp) == (std::set{kElf, kFirmware}), "findings are not exactly {ELF, firmware}");
  return "TAMPERED, findings {00130000 ELF SHA256, 00130003 Firmware SHA256}";
}

std::string t3_counterfeit() {
  int rejected = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Verifier v;
    auto original = device::new_device(device::randomized_spec(1000 + trial));
    v.provision(original);
    auto donor = device::new_device(device::randomized_spec(5000 + trial));
    auto clone = device::swap_identity(donor, device::identity_of(original));
    auto id = original.platform.serial;
    clone.platform = original.platform;
    const auto before = v.stored(id);
    auto nonce = trial % 2 ? verify::NoncePolicy::kOn : verify::NoncePolicy::kOff;
    try {
      v.attest(clone, Approach::kComponent, nonce);
    } catch (const Error& e) {
      if (e.code() == Errc::kEkBindingInvalid && v.stored(id) == before) ++rejected;
      continue;
    }
  }
  require(rejected == 100, std::to_string(rejected) + "/100 rejected");
  return "100/100 clones rejected with EkBindingInvalid, no certificate issued";
}

std::string determinism() {
  int false_tampered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Verifier v;
    auto state = device::new_device(device::randomized_spec(seed));
    auto gt = v.provision(state);
    auto r1 = v.attest(state, Approach::kSignature);
    auto r2 = v.attest(state, Approach::kComponent);
    auto entries = v.store.entries(state.platform.serial);
    require(entries.size() == 3, "expected 3 stored certificates");
    auto d0 = certgen::encode_der(entries[0].pac);
    auto d1 = certgen::encode_der(entries[1].pac);
    auto d2 = certgen::encode_der(entries[2].pac);
    require(d1 == d2 && d1 == d0, "device " + std::to_string(seed) + " produced differing DER");
    if (r1.overall != Verdict::kUnchanged) ++false_tampered;
    if (r2.overall != Verdict::kUnchanged) ++false_tampered;
  }
  require(false_tampered == 0, std::to_string(false_tampered) + " false TAMPERED verdicts");
  return "100 devices, repeated runs byte-identical, 0 false TAMPERED";
}

std::string rfc6979() {
  // RFC 6979 appendix A.2.5, P-256 with SHA-256.
  const auto x = from_hex("C9AFA9D845BA75166B5C215767B1D6934E50C3DB36E89B127B8A622B120F6721");
  const auto ux = "60FED4BA255A9D31C961EB74C6356D68C049B8923B61FA6CE669622E60F29FB6";
  const auto uy = "7903FE1008B8BC99A41AE9E95628BC64F2F1B20C2D7E9F5177A3C294D4462299";
  struct Vector {
    const char* msg;
    const char* k;
    const char* r;
    const char* s;
  };
  const Vector vectors[] = {
      {"sample", "A6E3C57DD01ABE90086538398355DD4C3B17AA873382B0F24D6129493D8AAD60",
       "EFD48B2AACB6A8FD1140DD9CD45E81D69D2C877B56AAF991C34D0EA84EAF3716",
       "F7CB1C942D657C41D436C7A1B6E29F65F3E900DBB9AFF4064DC4AB2F843ACDA8"},
      {"test", "D16B6AE827F17175E040871A1C7EC3500192C4C92677336EC2537ACAEE0008E0",
       "F1ABB023518351CD71D881567B1EA663ED3EFCF6C5132B354F28D3B0B7D38367",
       "019F4113742A2B14BD25926B49C649155F267E60D3814B4C0CC84250E46F0083"},
  };
  auto point = crypto::p256::public_point(x);
  require(to_hex(ByteView(point).subspan(1, 32), true) == ux && to_hex(ByteView(point).subspan(33, 32), true) == uy,
          "public key differs");
  auto key = crypto::SigningKey::p256_from_scalar(x);
  for (const auto& v : vectors) {
    auto h = crypto::sha256(as_bytes(v.msg));
    Bytes k;
    auto sig = crypto::p256::sign_hash(x, h, &k);
    require(to_hex(k, true) == v.k, std::string("k differs for '") + v.msg + "'");
    require(to_hex(sig.r, true) == v.r && to_hex(sig.s, true) == v.s, std::string("(r,s) differs for '") + v.msg + "'");
    require(key.sign(as_bytes(v.msg)) == crypto::p256::encode_signature(sig), "SigningKey::sign disagrees");
    require(key.public_key().verify(as_bytes(v.msg), key.sign(as_bytes(v.msg))), "OpenSSL rejects the signature");
  }
  return "k, r, s match for 'sample' and 'test'";
}

std::string certificate_size() {
  Verifier v;
  auto state = pac::testing::reference_device();
  auto pac = v.provision(state);
  auto size = certgen::encode_der(pac).size();
  // The same platform built from the published sample log text.
  auto list = complist::parse_log(pac::testing::sample_log(), pac::testing::sample_platform());
  auto digest = crypto::sha256(as_bytes(measure::render_entries(measure::measure(state).entries)));
  auto ek = measure::extract_ek_reference(state, digest);
  auto sample = certgen::sign_pac(
      certgen::build_tbs(list, ek, v.issuer.policy, certgen::BaseMode{}, v.issuer.key.algorithm()), v.issuer.key);
  auto sample_size = certgen::encode_der(sample).size();
  require(pac.tbs.components.size() == 10, "expected 10 components");
  require(size >= 1000 && size <= 4096, "reference certificate is " + std::to_string(size) + " bytes");
  require(sample_size >= 1000 && sample_size <= 4096, "sample-log certificate is " + std::to_string(sample_size) + " bytes");
  return "reference " + std::to_string(size) + " B, sample log " + std::to_string(sample_size) + " B";
}

// OpenSSL's generic parser as the independent decoder: it must accept the
// whole tree and re-encode the outer SEQUENCE to the same bytes.
bool openssl_accepts(const Bytes& der) {
  BIO* sink = BIO_new(BIO_s_mem());
  int dumped = ASN1_parse_dump(sink, der.data(), static_cast<long>(der.size()), 0, 0);
  BIO_free(sink);
  if (dumped != 1) return false;
  const unsigned char* p = der.data();
  STACK_OF(ASN1_TYPE)* seq = d2i_ASN1_SEQUENCE_ANY(nullptr, &p, static_cast<long>(der.size()));
  if (!seq || p != der.data() + der.size()) {
    sk_ASN1_TYPE_pop_free(seq, ASN1_TYPE_free);
    return false;
  }
  unsigned char* out = nullptr;
  int len = i2d_ASN1_SEQUENCE_ANY(seq, &out);
  bool same = len == static_cast<int>(der.size()) && std::equal(der.begin(), der.end(), out);
  OPENSSL_free(out);
  sk_ASN1_TYPE_pop_free(seq, ASN1_TYPE_free);
  return same;
}

certgen::PlatformAttributeCertificate random_certificate(std::mt19937_64& rng, const crypto::SigningKey& key,
                                                         const certgen::IssuerPolicy& policy) {
  auto state = device::new_device(device::randomized_spec(rng()));
  auto log = measure::measure(state);
  auto list = complist::parse_log(measure::render_entries(log.entries), state.platform);
  if (rng() % 3 == 0) list.platform.manufacturer_id = "1.3.6.1.4.1." + std::to_string(rng() % 100000);
  for (auto& c : list.components) {
    if (rng() % 4 == 0) c.revision = "r" + std::to_string(rng() % 100);
    c.field_replaceable = rng() % 5 == 0;
  }
  certgen::Mode mode = certgen::BaseMode{};
  if (rng() % 3 == 0) {
    auto after = list;
    after.components.back().serial += "-changed";
    auto changes = complist::diff(list, after);
    Bytes base(certgen::kSerialSize);
    for (auto& b : base) b = static_cast<std::uint8_t>(rng());
    mode = certgen::DeltaMode{base, changes};
    list = after;
  }
  auto tbs = certgen::build_tbs(list, log.ek, policy, mode, key.algorithm());
  return certgen::sign_pac(tbs, key);
}

std::string der_robustness() {
  auto key = pac::testing::test_issuer_key();
  certgen::IssuerPolicy policy;
  std::mt19937_64 rng(77);
  for (int i = 0; i < 1000; ++i) {
    auto pac = random_certificate(rng, key, policy);
    auto der = certgen::encode_der(pac);
    auto back = certgen::decode_der(der);
    require(back == pac, "round trip " + std::to_string(i) + " lost information");
    require(certgen::encode_der(back) == der, "re-encoding " + std::to_string(i) + " differs");
    require(openssl_accepts(der), "OpenSSL rejects certificate " + std::to_string(i));
    require(certgen::validate_pac(back, key.public_key(), kNow).ok(), "certificate " + std::to_string(i) + " invalid");
  }

  Verifier v;
  auto valid = certgen::encode_der(v.provision(pac::testing::reference_device()));
  const auto issuer_public = v.issuer.key.public_key();
  // Positions are split across threads; each worker owns its counters.
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::size_t> decoded_rejects(workers), accepted_at(workers, SIZE_MAX);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t pos = w; pos < valid.size(); pos += workers) {
        for (int delta = 1; delta < 256; ++delta) {
          Bytes m = valid;
          m[pos] = static_cast<std::uint8_t>(m[pos] ^ delta);
          try {
            auto pac = certgen::decode_der(m);
            if (certgen::validate_pac(pac, issuer_public, kNow).ok()) accepted_at[w] = pos;
          } catch (const Error&) {
            ++decoded_rejects[w];
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto pos : accepted_at) require(pos == SIZE_MAX, "mutation at byte " + std::to_string(pos) + " accepted");
  const std::size_t mutations = valid.size() * 255;
  std::size_t by_decode = 0;
  for (auto n : decoded_rejects) by_decode += n;

  auto anchor = certgen::encode_der(v.issuer.anchor);
  const unsigned char* p = anchor.data();
  X509* x = d2i_X509(nullptr, &p, static_cast<long>(anchor.size()));
  require(x != nullptr, "OpenSSL cannot parse the issuer certificate");
  EVP_PKEY* pub = X509_get_pubkey(x);
  int ok = X509_verify(x, pub);
  EVP_PKEY_free(pub);
  X509_free(x);
  require(ok == 1, "OpenSSL rejects the issuer certificate signature");

  std::ostringstream out;
  out << "1000 round trips; " << mutations << " single-byte mutations all rejected (" << by_decode
      << " by decode, " << mutations - by_decode << " by validate_pac); OpenSSL parses PAC and issuer DER";
  return out.str();
}

std::string delta_replay() {
  int reproduced = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(9000 + trial);
    Verifier v;
    auto state = device::new_device(device::randomized_spec(rng()));
    const auto id = state.platform.serial;
    v.provision(state);
    const int steps = 1 + static_cast<int>(rng() % 5);
    for (int s = 0; s < steps; ++s) {
      switch (rng() % 3) {
        case 0: {
          std::vector<unsigned> enabled;
          for (const auto& p : state.gpio_bank) {
            if (p.direction != device::Direction::kDisabled) enabled.push_back(p.pin_number);
          }
          if (!enabled.empty()) {
            unsigned pin = enabled[rng() % enabled.size()];
            state = device::tamper_gpio(state, pin, 1 - state.find_pin(pin)->level);
          }
          break;
        }
        case 1: {
          auto off = rng() % state.firmware_image.size();
          std::uint8_t b = state.firmware_image[off] ^ 0x5A;
          state = device::tamper_firmware(state, off, std::vector<std::uint8_t>{b});
          break;
        }
        default:
          state = device::tamper_elf(state, device::sample_image("section/" + std::to_string(rng()), 64));
      }
      v.attest(state, Approach::kComponent);
      verify::issue_delta(v.store, id, v.issuer);
    }
    auto entries = v.store.entries(id);
    std::vector<certgen::PlatformAttributeCertificate> deltas;
    for (std::size_t i = 1; i < entries.size(); ++i) {
      if (entries[i].pac.tbs.kind == certgen::PacKind::kDelta) deltas.push_back(entries[i].pac);
    }
    auto replayed = certgen::apply_deltas(entries.front().pac, deltas);
    auto fresh = complist::parse_log(measure::render_entries(measure::measure(state).entries), state.platform);
    complist::canonicalize(fresh);
    if (replayed == fresh) ++reproduced;
  }
  require(reproduced == 100, std::to_string(reproduced) + "/100 reproduced");
  return "100/100 delta chains replay to the fresh measurement";
}

std::string performance() {
  auto state = pac::testing::reference_device();
  auto key = pac::testing::test_issuer_key();
  certgen::IssuerPolicy policy;
  double worst = 0;
  for (int i = 0; i < 20; ++i) {
    auto t0 = Clock::now();
    auto log = measure::measure(state, as_bytes("fresh nonce"));
    auto list = complist::parse_log(measure::render_entries(log.entries), state.platform);
    auto pac = certgen::sign_pac(certgen::build_tbs(list, log.ek, policy, certgen::BaseMode{}, key.algorithm()), key);
    auto der = certgen::encode_der(pac);
    worst = std::max(worst, ms_since(t0));
    require(!der.empty(), "empty certificate");
  }
  require(worst < 1000, "slowest run took " + std::to_string(worst) + " ms");
  std::ostringstream out;
  out.precision(2);
  out << std::fixed << "measure + certificate generation, slowest of 20 runs " << worst << " ms";
  return out.str();
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<std::string()>> criteria[] = {
      {"T1 GPIO detection", t1_gpio},
      {"T4 firmware detection", t4_firmware},
      {"T5 ELF detection", t5_elf},
      {"T3 counterfeiting", t3_counterfeit},
      {"Determinism / approach 1 soundness", determinism},
      {"RFC 6979 conformance", rfc6979},
      {"Certificate size", certificate_size},
      {"DER robustness", der_robustness},
      {"Delta replay", delta_replay},
      {"Measurement + certificate generation < 1 s", performance},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    auto t0 = Clock::now();
    std::string detail;
    bool ok = false;
    try {
      detail = run();
      ok = true;
    } catch (const Failure& f) {
      detail = f.what;
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failed;
    std::cout << (ok ? "PASS" : "FAIL") << "  [PRIMARY] " << name << ": " << detail << " ("
              << static_cast<long>(ms_since(t0)) << " ms)" << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << "(" << std::size(criteria) - failed << "/"
            << std::size(criteria) << ")" << std::endl;
  return failed ? 1 : 0;
}
