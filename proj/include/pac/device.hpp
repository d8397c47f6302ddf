// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Simulated ESP32-S3-class prover: the state the attestation functions
// measure, a secure element holding the endorsement key (EK), and the tamper
// operations used to exercise the verifier.

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pac/bytes.hpp"
#include "pac/crypto.hpp"
#include "pac/platform.hpp"

namespace pac::device {

using Mac = std::array<std::uint8_t, 6>;

/// Colon-separated lowercase hex, e.g. "f4:12:fa:e3:91:ef".
std::string format_mac(const Mac& mac);
/// Accepts ':' or '-' separators, either case. Throws kMalformedMac.
Mac parse_mac(std::string_view text);

enum class Direction { kInput, kOutput, kDisabled };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view text);

struct GpioPin {
  std::uint8_t pin_number = 0;
  Direction direction = Direction::kInput;
  std::uint8_t level = 0;  // always 0 while disabled

  friend bool operator==(const GpioPin&, const GpioPin&) = default;
};

inline constexpr std::size_t kDefaultGpioCount = 45;

/// The EK lives here. The private scalar never leaves the object; callers get
/// the public point, the provisioning-time binding signature, and a signing
/// oracle that is serialized like a single-slot hardware element.
class SecureElementSim {
 public:
  /// Provisions the EK from seed material and binds it to chip_id.
  static std::shared_ptr<const SecureElementSim> provision(ByteView seed, std::uint64_t chip_id);

  /// ek_public || chip_id (8-byte big-endian).
  static Bytes binding_message(ByteView ek_public, std::uint64_t chip_id);

  const Bytes& ek_public() const { return ek_public_; }
  const Bytes& device_binding_sig() const { return binding_sig_; }
  std::uint64_t bound_chip_id() const { return bound_chip_id_; }

  /// ECDSA P-256 / SHA-256 with RFC 6979 nonces.
  Bytes sign(ByteView message) const;

 private:
  SecureElementSim(crypto::SigningKey ek, std::uint64_t chip_id);

  crypto::SigningKey ek_;
  Bytes ek_public_;
  Bytes binding_sig_;
  std::uint64_t bound_chip_id_ = 0;
  mutable std::mutex mu_;
};

struct SecureElementSpec {
  Bytes seed;
  // Chip the EK was bound to at production; defaults to DeviceSpec::chip_id.
  std::optional<std::uint64_t> bound_chip_id;

  friend bool operator==(const SecureElementSpec&, const SecureElementSpec&) = default;
};

/// Everything needed to manufacture a device. Construction from a spec is
/// a pure function.
struct DeviceSpec {
  std::uint64_t chip_id = 0;
  std::uint64_t flash_id = 0;
  Mac eth_mac{};
  Mac wifi_mac{};
  Mac bt_mac{};
  Bytes firmware_image;
  Bytes bootloader_image;
  Bytes elf_image;
  Bytes secure_boot_pubkey;
  std::vector<GpioPin> gpio_bank;
  PlatformMeta platform;
  bool secure_boot_enabled = true;
  bool reproducible_build = true;
  SecureElementSpec secure_element;

  friend bool operator==(const DeviceSpec&, const DeviceSpec&) = default;
};

struct DeviceState {
  std::uint64_t chip_id = 0;
  std::uint64_t flash_id = 0;
  Mac eth_mac{};
  Mac wifi_mac{};
  Mac bt_mac{};
  Bytes firmware_image;
  Bytes bootloader_image;
  Bytes elf_image;
  Bytes secure_boot_pubkey;
  bool secure_boot_enabled = true;
  std::vector<GpioPin> gpio_bank;
  PlatformMeta platform;
  std::shared_ptr<const SecureElementSim> secure_element;

  const GpioPin* find_pin(unsigned pin_number) const;

  friend bool operator==(const DeviceState& a, const DeviceState& b);
};

/// The reference sample platform: chip 2113559, MACs f4:12:fa:e3:91:e{f,c,e},
/// 45 GPIO pins (22-25 disabled), images generated from fixed labels.
DeviceSpec reference_spec();

/// A distinct but valid device drawn from `seed`: random identity, images,
/// GPIO directions/levels and secure-element seed. Secure boot is off for
/// roughly one device in four.
DeviceSpec randomized_spec(std::uint64_t seed);

/// Deterministic pseudo-random bytes for sample images.
Bytes sample_image(std::string_view label, std::size_t size);

DeviceState new_device(const DeviceSpec& spec);

DeviceState tamper_gpio(const DeviceState& state, unsigned pin, unsigned level);
DeviceState tamper_firmware(const DeviceState& state, std::size_t offset, ByteView replacement);
/// Appends the section to the ELF and SHA-256(section) to the firmware image,
/// standing in for a rebuild that changes both artifacts.
DeviceState tamper_elf(const DeviceState& state, ByteView appended_section);

struct Identity {
  Mac eth_mac{};
  Mac wifi_mac{};
  Mac bt_mac{};
  std::uint64_t chip_id = 0;
};

/// Replaces the identity fields. The secure element is kept: a clone
/// cannot carry the original EK.
DeviceState swap_identity(const DeviceState& state, const Identity& identity);
DeviceState swap_identity(const DeviceState& state, std::string_view eth_mac,
                          std::string_view wifi_mac, std::string_view bt_mac,
                          std::uint64_t chip_id);

Identity identity_of(const DeviceState& state);

/// Public view of the state as JSON. Contains no EK private material.
std::string describe(const DeviceState& state);

}  // namespace pac::device
