// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include "pac/verify.hpp"

#include <algorithm>
#include <tuple>

#include "pac/error.hpp"
#include "pac/issuer.hpp"

namespace pac::verify {

namespace {

using certgen::PlatformAttributeCertificate;

bool is_deterministic(crypto::SignatureAlgorithm alg) {
  switch (alg) {
    case crypto::SignatureAlgorithm::kEcdsaP256Sha256:  // RFC 6979 nonces
    case crypto::SignatureAlgorithm::kRsa2048Pkcs1v15Sha256:
      return true;
  }
  return false;
}

std::string describe_value(const complist::ComponentIdentifier& c) {
  if (!c.revision) return c.serial;
  return c.serial + " (revision " + *c.revision + ")";
}

void require_chain(const PlatformAttributeCertificate& pac, const store::IssuerMaterial& issuer,
                   std::int64_t now, std::string_view what) {
  auto chain = certgen::verify_chain(pac, issuer.intermediates, issuer.anchor, now);
  if (chain.ok()) return;
  const auto& f = chain.failures.front();
  throw Error(Errc::kChainInvalid, std::string(what) + ": depth " + std::to_string(f.depth) + " " +
                                       std::string(certgen::to_string(f.problem)) + " (" + f.detail + ")");
}

measure::EkReference checked_ek(const measure::MeasurementLog& log) {
  auto chip = measure::chip_id_of(log);
  if (!chip) throw Error(Errc::kEkBindingInvalid, "measurement log carries no chip ID");
  if (!measure::verify_binding(log.ek, *chip)) {
    throw Error(Errc::kEkBindingInvalid, "EK binding signature does not cover chip ID " + std::to_string(*chip));
  }
  return log.ek;
}

PlatformAttributeCertificate certify(const measure::MeasurementLog& log, const PlatformMeta& platform,
                                     const store::IssuerMaterial& issuer, const certgen::Mode& mode) {
  auto list = complist::parse_log(measure::render_entries(log.entries), platform);
  auto tbs = certgen::build_tbs(list, log.ek, issuer.policy, mode, issuer.key.algorithm());
  return certgen::sign_pac(tbs, issuer.key);
}

std::vector<Finding> compare_components(const PlatformAttributeCertificate& gt,
                                        const PlatformAttributeCertificate& pa) {
  using complist::ChangeKind;
  auto corr = complist::correlate(gt.component_list(), pa.component_list());
  std::vector<Finding> out;
  for (const auto& [before, after] : corr.pairs) {
    if (comparecomp(before, after)) continue;
    out.push_back({Finding::Kind::kModified,
                   complist::ComponentChange{ChangeKind::kModified, after, before.serial, after.serial},
                   describe_value(before), describe_value(after)});
  }
  for (const auto& c : corr.removed) {
    out.push_back({Finding::Kind::kRemoved, complist::ComponentChange{ChangeKind::kRemoved, c, c.serial, {}},
                   describe_value(c), ""});
  }
  for (const auto& c : corr.added) {
    out.push_back({Finding::Kind::kAdded, complist::ComponentChange{ChangeKind::kAdded, c, {}, c.serial}, "",
                   describe_value(c)});
  }
  std::stable_sort(out.begin(), out.end(), [](const Finding& a, const Finding& b) {
    const auto& x = a.change->identifier;
    const auto& y = b.change->identifier;
    return std::tie(x.component_class.value, x.model) < std::tie(y.component_class.value, y.model);
  });
  return out;
}

}  // namespace

std::string_view to_string(Approach a) { return a == Approach::kSignature ? "signature" : "component"; }

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kUnchanged:
      return "UNCHANGED";
    case Verdict::kTampered:
      return "TAMPERED";
    case Verdict::kError:
      return "ERROR";
  }
  return "ERROR";
}

std::string_view to_string(Finding::Kind kind) {
  switch (kind) {
    case Finding::Kind::kSignatureMismatch:
      return "SIGNATURE_MISMATCH";
    case Finding::Kind::kAdded:
      return "ADDED";
    case Finding::Kind::kRemoved:
      return "REMOVED";
    case Finding::Kind::kModified:
      return "MODIFIED";
  }
  return "?";
}

Approach parse_approach(std::string_view text) {
  if (text == "sig" || text == "signature") return Approach::kSignature;
  if (text == "comp" || text == "component") return Approach::kComponent;
  throw Error(Errc::kInvalidArgument, "approach must be 'sig' or 'comp', got '" + std::string(text) + "'");
}

bool comparesig(const PlatformAttributeCertificate& gt, const PlatformAttributeCertificate& pa) {
  const auto a = gt.tbs.signature_algorithm;
  const auto b = pa.tbs.signature_algorithm;
  if (a != b) {
    throw Error(Errc::kAlgorithmMismatch, std::string(crypto::name_of(a)) + " vs " + std::string(crypto::name_of(b)));
  }
  if (!is_deterministic(a)) {
    throw Error(Errc::kNonDeterministicAlgorithm,
                "signature algorithm " + std::to_string(static_cast<int>(a)) + " is not deterministic");
  }
  return gt.signature == pa.signature;
}

bool comparecomp(const complist::ComponentIdentifier& gt, const complist::ComponentIdentifier& pa) {
  if (gt.component_class != pa.component_class || gt.model != pa.model) {
    throw Error(Errc::kCorrelationMismatch, "cannot compare " + measure::class_hex(gt.component_class.value) + "/" +
                                                gt.model + " with " + measure::class_hex(pa.component_class.value) +
                                                "/" + pa.model);
  }
  return gt.serial == pa.serial && gt.revision == pa.revision;
}

measure::MeasurementLog LocalProverChannel::request(std::optional<ByteView> nonce) {
  std::lock_guard lock(mu_);
  return measure::measure(state_, nonce);
}

VerificationReport run_verification(ProverChannel& channel, store::CertStore& store, const std::string& device_id,
                                    const store::IssuerMaterial& issuer, const SessionOptions& options) {
  auto gt = store.ground_truth(device_id);
  if (!gt) throw Error(Errc::kNoGroundTruth, "no ground-truth certificate for device " + device_id);
  auto recorded_issuer = store.issuer_fingerprint(device_id);
  if (recorded_issuer && *recorded_issuer != store::fingerprint(issuer.key.public_key())) {
    throw Error(Errc::kChainInvalid, "device " + device_id + " was provisioned under a different issuer key");
  }

  std::optional<Bytes> nonce;
  if (options.nonce_policy == NoncePolicy::kOn) nonce = crypto::random_bytes(32);
  auto log = nonce ? channel.request(ByteView(*nonce)) : channel.request(std::nullopt);

  if (log.nonce_echo != nonce) {
    throw Error(Errc::kNonceMismatch, "prover answered with nonce " +
                                          (log.nonce_echo ? to_hex(*log.nonce_echo) : std::string("<none>")));
  }
  if (nonce) {
    auto digest = measure::entries_digest(log);
    if (!log.ek.quote_sig || !measure::verify_quote(log.ek, digest, *nonce)) {
      throw Error(Errc::kEkBindingInvalid, "quote over the measurement digest does not verify under the EK");
    }
  }
  auto ek = checked_ek(log);
  if (crypto::sha256(ek.ek_public) != gt->tbs.holder_ek_digest) {
    throw Error(Errc::kEkBindingInvalid, "EK " + to_hex(crypto::sha256(ek.ek_public)) +
                                             " is not the ground-truth holder " +
                                             to_hex(gt->tbs.holder_ek_digest));
  }
  require_chain(*gt, issuer, options.now, "ground truth");

  auto pa = certify(log, gt->tbs.platform, issuer, certgen::BaseMode{});
  store.append(device_id, pa);
  require_chain(pa, issuer, options.now, "new certificate");

  VerificationReport report;
  report.device_id = device_id;
  report.approach = options.approach;
  report.ground_truth_serial = gt->tbs.serial_number;
  report.new_cert_serial = pa.tbs.serial_number;
  report.timestamp = options.now;
  if (options.approach == Approach::kSignature) {
    if (!comparesig(*gt, pa)) {
      report.findings.push_back({Finding::Kind::kSignatureMismatch, std::nullopt, to_hex(gt->signature),
                                 to_hex(pa.signature)});
    }
  } else {
    report.findings = compare_components(*gt, pa);
  }
  report.overall = report.findings.empty() ? Verdict::kUnchanged : Verdict::kTampered;
  return report;
}

std::vector<PlatformAttributeCertificate> history(const store::CertStore& store, const std::string& device_id) {
  std::vector<PlatformAttributeCertificate> out;
  for (auto& e : store.entries(device_id)) out.push_back(std::move(e.pac));
  return out;
}

PlatformAttributeCertificate provision_ground_truth(const device::DeviceState& state, store::CertStore& store,
                                                    const store::IssuerMaterial& issuer) {
  auto log = measure::measure(state);
  checked_ek(log);
  auto pac = certify(log, state.platform, issuer, certgen::BaseMode{});
  store.append_ground_truth(state.platform.serial, pac, issuer.key.public_key());
  return pac;
}

std::optional<PlatformAttributeCertificate> issue_delta(store::CertStore& store, const std::string& device_id,
                                                        const store::IssuerMaterial& issuer) {
  auto entries = store.entries(device_id);
  if (entries.empty() || !entries.front().ground_truth) {
    throw Error(Errc::kNoGroundTruth, "no ground-truth certificate for device " + device_id);
  }
  const auto& base = entries.front().pac;
  std::vector<PlatformAttributeCertificate> deltas;
  const PlatformAttributeCertificate* latest = &base;
  for (std::size_t i = 1; i < entries.size(); ++i) {
    const auto& pac = entries[i].pac;
    if (pac.tbs.kind == certgen::PacKind::kDelta) {
      deltas.push_back(pac);
    } else {
      latest = &pac;
    }
  }
  auto effective = certgen::apply_deltas(base, deltas);
  auto target = latest->component_list();
  auto changes = complist::diff(effective, target);
  if (changes.empty()) return std::nullopt;

  const Bytes& previous = deltas.empty() ? base.tbs.serial_number : deltas.back().tbs.serial_number;
  measure::EkReference ek{latest->tbs.ek_public, latest->tbs.ek_binding_sig, std::nullopt};
  auto tbs = certgen::build_tbs(target, ek, issuer.policy, certgen::DeltaMode{previous, std::move(changes)},
                                issuer.key.algorithm());
  auto pac = certgen::sign_pac(tbs, issuer.key);
  store.append(device_id, pac);
  return pac;
}

}  // namespace pac::verify
