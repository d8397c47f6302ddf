// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Prover-side attestation functions: extract the platform attributes of a
// DeviceState into a MeasurementLog and sign an EK reference.
//
// Rendered log format (LF line endings, bit-exact on the wire):
//
//   CLASS=<8 hex digits>|LABEL=<text>|VALUE=<text>     one per entry
//   EK_PUBLIC=<hex>                                    uncompressed P-256 point
//   EK_BINDING=<hex>                                   DER ECDSA signature
//   NONCE=<hex>                                        only with a nonce
//   EK_QUOTE=<hex>                                     only with a nonce

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pac/bytes.hpp"
#include "pac/crypto.hpp"
#include "pac/device.hpp"

namespace pac::measure {

namespace component_class {
inline constexpr std::uint32_t kEmbeddedProcessor = 0x00010008;
inline constexpr std::uint32_t kFlashMemory = 0x0006000A;
inline constexpr std::uint32_t kEthernetAdapter = 0x00090000;
inline constexpr std::uint32_t kWifiAdapter = 0x00090003;
inline constexpr std::uint32_t kBluetoothAdapter = 0x00090004;
inline constexpr std::uint32_t kFirmware = 0x00130003;
inline constexpr std::uint32_t kBootloader = 0x00130005;
inline constexpr std::uint32_t kSoftware = 0x00130000;  // ELF and Secure Boot PK
inline constexpr std::uint32_t kGpio = 0x000E0000;
}  // namespace component_class

namespace label {
inline constexpr std::string_view kChipId = "Chip ID";
inline constexpr std::string_view kFlashId = "Flash ID";
inline constexpr std::string_view kMac = "MAC";
inline constexpr std::string_view kFirmware = "Firmware SHA256";
inline constexpr std::string_view kBootloader = "Bootloader SHA256";
inline constexpr std::string_view kElf = "ELF SHA256";
inline constexpr std::string_view kSecureBootPk = "Secure Boot PK SHA256";
inline constexpr std::string_view kGpio = "Pins/Levels";
}  // namespace label

struct LogEntry {
  std::uint32_t component_class = 0;
  std::string label;
  std::string value;

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

struct EkReference {
  Bytes ek_public;
  Bytes binding_sig;
  std::optional<Bytes> quote_sig;

  friend bool operator==(const EkReference&, const EkReference&) = default;
};

struct MeasurementLog {
  std::vector<LogEntry> entries;
  EkReference ek;
  std::optional<Bytes> nonce_echo;

  friend bool operator==(const MeasurementLog&, const MeasurementLog&) = default;
};

/// Entry order: Chip ID, Flash ID, Ethernet, Wi-Fi, Bluetooth, firmware,
/// bootloader, ELF, Secure Boot PK (only when secure boot is enabled), GPIO.
/// With a nonce, the log carries a quote over entries_digest || nonce.
MeasurementLog measure(const device::DeviceState& state, std::optional<ByteView> nonce = std::nullopt);

/// digest must be 32 bytes (kBadDigestLength otherwise).
EkReference extract_ek_reference(const device::DeviceState& state, ByteView digest,
                                 std::optional<ByteView> nonce = std::nullopt);

std::string render_entries(std::span<const LogEntry> entries);
std::string render_log(const MeasurementLog& log);
/// Inverse of render_log; kMalformedLog with a line number on bad input.
MeasurementLog parse_measurement_log(std::string_view text);

/// SHA-256 over render_entries(log.entries): the value the EK quote covers.
crypto::Digest entries_digest(const MeasurementLog& log);

Bytes quote_message(ByteView digest, ByteView nonce);
bool verify_binding(const EkReference& ek, std::uint64_t chip_id);
bool verify_quote(const EkReference& ek, ByteView digest, ByteView nonce);

std::optional<std::uint64_t> chip_id_of(const MeasurementLog& log);

std::string class_hex(std::uint32_t component_class);

}  // namespace pac::measure
