// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Verifier side of an attestation session: request a measurement, issue the
// new certificate, and compare it against the ground truth either by
// signature (approach 1) or component by component (approach 2).

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pac/certgen.hpp"
#include "pac/complist.hpp"
#include "pac/device.hpp"
#include "pac/measure.hpp"
#include "pac/store.hpp"

namespace pac::verify {

enum class Approach { kSignature, kComponent };
enum class Verdict { kUnchanged, kTampered, kError };
enum class NoncePolicy { kOff, kOn };

std::string_view to_string(Approach a);
std::string_view to_string(Verdict v);
/// "sig"/"signature" or "comp"/"component"; kInvalidArgument otherwise.
Approach parse_approach(std::string_view text);

/// Approach 1 compares opaque signatures, so its only possible finding is a
/// signature mismatch. Approach 2 reports one finding per failed component.
struct Finding {
  enum class Kind { kSignatureMismatch, kAdded, kRemoved, kModified } kind;
  std::optional<complist::ComponentChange> change;  // component findings only
  std::string expected;                             // ground-truth side
  std::string actual;                               // freshly measured side

  friend bool operator==(const Finding&, const Finding&) = default;
};

std::string_view to_string(Finding::Kind kind);

struct VerificationReport {
  std::string device_id;
  Approach approach = Approach::kComponent;
  Verdict overall = Verdict::kError;
  std::vector<Finding> findings;
  Bytes ground_truth_serial;
  Bytes new_cert_serial;
  std::int64_t timestamp = 0;
  std::string error;  // set only for kError

  friend bool operator==(const VerificationReport&, const VerificationReport&) = default;
};

/// Side-by-side text rendering.
std::string render_text(const VerificationReport& report);
/// Canonical JSON (sorted keys, compact).
std::string to_json(const VerificationReport& report);

/// True iff the signatures are byte-identical. Throws kAlgorithmMismatch when
/// the algorithm identifiers differ and kNonDeterministicAlgorithm when the
/// algorithm is not known to sign deterministically.
bool comparesig(const certgen::PlatformAttributeCertificate& gt,
                const certgen::PlatformAttributeCertificate& pa);

/// True iff serial and revision agree. kCorrelationMismatch when the pair is
/// not the same (class, model).
bool comparecomp(const complist::ComponentIdentifier& gt, const complist::ComponentIdentifier& pa);

/// The verifier's view of one prover.
class ProverChannel {
 public:
  virtual ~ProverChannel() = default;
  /// kChannelTimeout when the prover does not answer in time.
  virtual measure::MeasurementLog request(std::optional<ByteView> nonce) = 0;
};

/// In-process prover around a device state.
class LocalProverChannel final : public ProverChannel {
 public:
  explicit LocalProverChannel(device::DeviceState state) : state_(std::move(state)) {}
  measure::MeasurementLog request(std::optional<ByteView> nonce) override;

 private:
  std::mutex mu_;
  device::DeviceState state_;
};

struct SessionOptions {
  Approach approach = Approach::kComponent;
  NoncePolicy nonce_policy = NoncePolicy::kOff;
  std::int64_t now = 0;  // validity checks and report timestamp
};

/// One attestation session (request, check EK, certify, persist, compare).
/// Errors raised before the new certificate exists are thrown:
/// kNoGroundTruth, kChannelTimeout, kNonceMismatch, kEkBindingInvalid,
/// kChainInvalid. Once issued, the certificate is always stored.
VerificationReport run_verification(ProverChannel& channel, store::CertStore& store,
                                    const std::string& device_id, const store::IssuerMaterial& issuer,
                                    const SessionOptions& options);

/// Ground truth first, then issuance order. Empty for an unknown device.
std::vector<certgen::PlatformAttributeCertificate> history(const store::CertStore& store,
                                                           const std::string& device_id);

/// Builds the ground-truth base certificate for a device and stores it.
certgen::PlatformAttributeCertificate provision_ground_truth(const device::DeviceState& state,
                                                             store::CertStore& store,
                                                             const store::IssuerMaterial& issuer);

/// Issues a delta certificate from the latest stored certificate's effective
/// component list to the most recent measurement; nullopt when nothing
/// changed.
std::optional<certgen::PlatformAttributeCertificate> issue_delta(store::CertStore& store,
                                                                 const std::string& device_id,
                                                                 const store::IssuerMaterial& issuer);

}  // namespace pac::verify
