// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include "pac/measure.hpp"

#include <charconv>
#include <cstdio>

#include "pac/error.hpp"

namespace pac::measure {

std::string class_hex(std::uint32_t component_class) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08X", component_class);
  return buf;
}

namespace {

std::string sha256_hex(const Bytes& image) { return to_hex(crypto::sha256(image)); }

std::string gpio_levels(const device::DeviceState& state) {
  std::string out;
  for (const auto& p : state.gpio_bank) {
    if (!out.empty()) out.push_back(',');
    out.push_back(p.level ? '1' : '0');
  }
  return out;
}

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(Errc::kMalformedLog, "line " + std::to_string(line) + ": " + what);
}

Bytes parse_hex_field(std::string_view line, std::string_view key, std::size_t line_no) {
  try {
    auto out = from_hex(line.substr(key.size()));
    if (out.empty()) malformed(line_no, std::string(key) + " is empty");
    return out;
  } catch (const Error& e) {
    if (e.code() == Errc::kMalformedLog) throw;
    malformed(line_no, "bad hex after " + std::string(key));
  }
}

}  // namespace

MeasurementLog measure(const device::DeviceState& state, std::optional<ByteView> nonce) {
  using namespace component_class;
  MeasurementLog log;
  auto& e = log.entries;
  e.push_back({kEmbeddedProcessor, std::string(label::kChipId), std::to_string(state.chip_id)});
  e.push_back({kFlashMemory, std::string(label::kFlashId), std::to_string(state.flash_id)});
  e.push_back({kEthernetAdapter, std::string(label::kMac), device::format_mac(state.eth_mac)});
  e.push_back({kWifiAdapter, std::string(label::kMac), device::format_mac(state.wifi_mac)});
  e.push_back({kBluetoothAdapter, std::string(label::kMac), device::format_mac(state.bt_mac)});
  e.push_back({kFirmware, std::string(label::kFirmware), sha256_hex(state.firmware_image)});
  e.push_back({kBootloader, std::string(label::kBootloader), sha256_hex(state.bootloader_image)});
  e.push_back({kSoftware, std::string(label::kElf), sha256_hex(state.elf_image)});
  if (state.secure_boot_enabled) {
    e.push_back({kSoftware, std::string(label::kSecureBootPk), sha256_hex(state.secure_boot_pubkey)});
  }
  e.push_back({kGpio, std::string(label::kGpio), gpio_levels(state)});

  auto digest = entries_digest(log);
  log.ek = extract_ek_reference(state, digest, nonce);
  if (nonce) log.nonce_echo = Bytes(nonce->begin(), nonce->end());
  return log;
}

EkReference extract_ek_reference(const device::DeviceState& state, ByteView digest,
                                 std::optional<ByteView> nonce) {
  if (digest.size() != 32) {
    throw Error(Errc::kBadDigestLength, "expected a 32-byte digest, got " + std::to_string(digest.size()));
  }
  if (!state.secure_element) throw Error(Errc::kInvalidArgument, "device has no secure element");
  EkReference ref;
  ref.ek_public = state.secure_element->ek_public();
  ref.binding_sig = state.secure_element->device_binding_sig();
  if (nonce) ref.quote_sig = state.secure_element->sign(quote_message(digest, *nonce));
  return ref;
}

std::string render_entries(std::span<const LogEntry> entries) {
  std::string out;
  for (const auto& e : entries) {
    if (e.label.find_first_of("|\r\n") != std::string::npos || e.label.empty()) {
      throw Error(Errc::kMalformedLog, "label '" + e.label + "' cannot be rendered");
    }
    if (e.value.find_first_of("\r\n") != std::string::npos) {
      throw Error(Errc::kMalformedLog, "value of '" + e.label + "' contains a line break");
    }
    out += "CLASS=" + class_hex(e.component_class) + "|LABEL=" + e.label + "|VALUE=" + e.value + "\n";
  }
  return out;
}

std::string render_log(const MeasurementLog& log) {
  std::string out = render_entries(log.entries);
  out += "EK_PUBLIC=" + to_hex(log.ek.ek_public) + "\n";
  out += "EK_BINDING=" + to_hex(log.ek.binding_sig) + "\n";
  if (log.nonce_echo) out += "NONCE=" + to_hex(*log.nonce_echo) + "\n";
  if (log.ek.quote_sig) out += "EK_QUOTE=" + to_hex(*log.ek.quote_sig) + "\n";
  return out;
}

MeasurementLog parse_measurement_log(std::string_view text) {
  MeasurementLog log;
  enum class Stage { kEntries, kBinding, kNonce, kQuote, kDone } stage = Stage::kEntries;
  bool have_public = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) malformed(line_no + 1, "missing line terminator");
    auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    if (line.starts_with("CLASS=")) {
      if (stage != Stage::kEntries || have_public) malformed(line_no, "entry after EK lines");
      if (line.size() < 6 + 8 + 7 || line.substr(14, 7) != "|LABEL=") {
        malformed(line_no, "expected CLASS=<8 hex>|LABEL=");
      }
      LogEntry entry;
      auto cls = line.substr(6, 8);
      auto r = std::from_chars(cls.data(), cls.data() + 8, entry.component_class, 16);
      if (r.ec != std::errc() || r.ptr != cls.data() + 8) malformed(line_no, "class is not 8 hex digits");
      auto rest = line.substr(21);
      auto bar = rest.find('|');
      if (bar == std::string_view::npos || rest.substr(bar, 7) != "|VALUE=") {
        malformed(line_no, "expected |VALUE=");
      }
      entry.label = rest.substr(0, bar);
      if (entry.label.empty()) malformed(line_no, "empty label");
      entry.value = rest.substr(bar + 7);
      if (entry.value.find('\r') != std::string::npos) malformed(line_no, "carriage return in value");
      log.entries.push_back(std::move(entry));
    } else if (line.starts_with("EK_PUBLIC=")) {
      if (have_public) malformed(line_no, "duplicate EK_PUBLIC");
      log.ek.ek_public = parse_hex_field(line, "EK_PUBLIC=", line_no);
      have_public = true;
      stage = Stage::kBinding;
    } else if (line.starts_with("EK_BINDING=")) {
      if (stage != Stage::kBinding) malformed(line_no, "EK_BINDING out of order");
      log.ek.binding_sig = parse_hex_field(line, "EK_BINDING=", line_no);
      stage = Stage::kNonce;
    } else if (line.starts_with("NONCE=")) {
      if (stage != Stage::kNonce) malformed(line_no, "NONCE out of order");
      log.nonce_echo = parse_hex_field(line, "NONCE=", line_no);
      stage = Stage::kQuote;
    } else if (line.starts_with("EK_QUOTE=")) {
      if (stage != Stage::kQuote) malformed(line_no, "EK_QUOTE without NONCE");
      log.ek.quote_sig = parse_hex_field(line, "EK_QUOTE=", line_no);
      stage = Stage::kDone;
    } else {
      malformed(line_no, "unrecognised line");
    }
  }
  if (stage == Stage::kEntries || stage == Stage::kBinding) {
    malformed(line_no, "missing EK_PUBLIC / EK_BINDING");
  }
  return log;
}

crypto::Digest entries_digest(const MeasurementLog& log) {
  return crypto::sha256(as_bytes(render_entries(log.entries)));
}

Bytes quote_message(ByteView digest, ByteView nonce) {
  Bytes msg(digest.begin(), digest.end());
  append(msg, nonce);
  return msg;
}

bool verify_binding(const EkReference& ek, std::uint64_t chip_id) {
  try {
    auto key = crypto::PublicKey::from_p256_point(ek.ek_public);
    return key.verify(device::SecureElementSim::binding_message(ek.ek_public, chip_id), ek.binding_sig);
  } catch (const Error&) {
    return false;
  }
}

bool verify_quote(const EkReference& ek, ByteView digest, ByteView nonce) {
  if (!ek.quote_sig) return false;
  try {
    auto key = crypto::PublicKey::from_p256_point(ek.ek_public);
    return key.verify(quote_message(digest, nonce), *ek.quote_sig);
  } catch (const Error&) {
    return false;
  }
}

std::optional<std::uint64_t> chip_id_of(const MeasurementLog& log) {
  for (const auto& e : log.entries) {
    if (e.component_class != component_class::kEmbeddedProcessor || e.label != label::kChipId) continue;
    std::uint64_t v = 0;
    auto r = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (r.ec == std::errc() && r.ptr == e.value.data() + e.value.size()) return v;
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace pac::measure
