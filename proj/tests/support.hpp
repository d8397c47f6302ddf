// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <stdlib.h>

#include <filesystem>
#include <optional>
#include <string>

#include "pac/certgen.hpp"
#include "pac/device.hpp"
#include "pac/store.hpp"
#include "pac/verify.hpp"

namespace pac::testing {

// A fixed clock inside the default issuer validity window.
inline constexpr std::int64_t kNow = 1760000000;  // 2025-10-09

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "pacattest-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    // Stored certificates are read-only; restore write bits before removal.
    for (auto it = std::filesystem::recursive_directory_iterator(path_, ec);
         it != std::filesystem::recursive_directory_iterator(); ++it) {
      std::filesystem::permissions(it->path(), std::filesystem::perms::owner_write,
                                   std::filesystem::perm_options::add, ec);
    }
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline crypto::SigningKey test_issuer_key(std::string_view label = "test issuer") {
  return crypto::SigningKey::p256_from_scalar(crypto::p256::scalar_from_seed(as_bytes(label)));
}

/// Store plus issuer in a scratch directory.
struct Verifier {
  TempDir dir;
  store::CertStore store{dir.path() / "store"};
  store::IssuerMaterial issuer = store::make_issuer(test_issuer_key(), certgen::IssuerPolicy{});

  Verifier() { store.save_issuer(issuer); }

  certgen::PlatformAttributeCertificate provision(const device::DeviceState& state) {
    return verify::provision_ground_truth(state, store, issuer);
  }

  verify::VerificationReport attest(const device::DeviceState& state, verify::Approach approach,
                                    verify::NoncePolicy nonce = verify::NoncePolicy::kOff) {
    verify::LocalProverChannel channel(state);
    return verify::run_verification(channel, store, state.platform.serial, issuer, {approach, nonce, kNow});
  }

  std::size_t stored(const std::string& device_id) const { return store.entries(device_id).size(); }
};

inline device::DeviceState reference_device() { return device::new_device(device::reference_spec()); }

/// A measurement log in the shape of the published sample output. The hash
/// values there are 10-character prefixes; they are padded to full SHA-256
/// length with zeros here.
inline std::string sample_log() {
  auto pad = [](std::string prefix) { return prefix + std::string(64 - prefix.size(), '0'); };
  std::string gpio = "1,0,0,1,0,1";
  for (int i = 6; i < 45; ++i) gpio += ",0";
  return "CLASS=00010008|LABEL=Chip ID|VALUE=2113559\n"
         "CLASS=0006000A|LABEL=Flash ID|VALUE=2958321\n"
         "CLASS=00090000|LABEL=MAC|VALUE=f4:12:fa:e3:91:ef\n"
         "CLASS=00090003|LABEL=MAC|VALUE=f4:12:fa:e3:91:ec\n"
         "CLASS=00090004|LABEL=MAC|VALUE=f4:12:fa:e3:91:ee\n"
         "CLASS=00130003|LABEL=Firmware SHA256|VALUE=" + pad("c3f28aa689") + "\n"
         "CLASS=00130005|LABEL=Bootloader SHA256|VALUE=" + pad("fcc1a1e96b") + "\n"
         "CLASS=00130000|LABEL=ELF SHA256|VALUE=" + pad("93a0d81ba7") + "\n"
         "CLASS=00130000|LABEL=Secure Boot PK SHA256|VALUE=" + pad("14dd0484da") + "\n"
         "CLASS=000E0000|LABEL=Pins/Levels|VALUE=" + gpio + "\n";
}

inline PlatformMeta sample_platform() {
  return {"Espressif Systems", "ESP32-S3", "v0.2", "ESP32S3-2113559", std::nullopt};
}

}  // namespace pac::testing
