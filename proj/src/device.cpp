// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include "pac/device.hpp"

#include <algorithm>
#include <random>
#include <set>

#include <json.hpp>

#include "pac/error.hpp"

namespace pac::device {

std::string format_mac(const Mac& mac) {
  std::string out;
  for (std::size_t i = 0; i < mac.size(); ++i) {
    if (i) out.push_back(':');
    out += to_hex(ByteView(&mac[i], 1));
  }
  return out;
}

Mac parse_mac(std::string_view text) {
  Mac mac{};
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto sep = text.find_first_of(":-", pos);
    if (sep == std::string_view::npos) sep = text.size();
    auto part = text.substr(pos, sep - pos);
    if (part.size() != 2 || count >= mac.size()) {
      throw Error(Errc::kMalformedMac, "'" + std::string(text) + "' is not a 6-byte MAC");
    }
    try {
      mac[count++] = from_hex(part)[0];
    } catch (const Error&) {
      throw Error(Errc::kMalformedMac, "'" + std::string(text) + "' has a non-hex octet");
    }
    pos = sep + 1;
  }
  if (count != mac.size()) {
    throw Error(Errc::kMalformedMac, "'" + std::string(text) + "' is not a 6-byte MAC");
  }
  return mac;
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::kInput: return "input";
    case Direction::kOutput: return "output";
    case Direction::kDisabled: return "disabled";
  }
  return "disabled";
}

Direction parse_direction(std::string_view text) {
  if (text == "input") return Direction::kInput;
  if (text == "output") return Direction::kOutput;
  if (text == "disabled") return Direction::kDisabled;
  throw Error(Errc::kConfig, "unknown GPIO direction '" + std::string(text) + "'");
}

// ---------------------------------------------------------------- secure element

SecureElementSim::SecureElementSim(crypto::SigningKey ek, std::uint64_t chip_id)
    : ek_(std::move(ek)), bound_chip_id_(chip_id) {
  const auto& spki = ek_.public_key().spki();
  // The uncompressed point is the tail of the P-256 SubjectPublicKeyInfo.
  ek_public_.assign(spki.end() - static_cast<std::ptrdiff_t>(crypto::p256::kPointSize), spki.end());
  binding_sig_ = ek_.sign(binding_message(ek_public_, chip_id));
}

std::shared_ptr<const SecureElementSim> SecureElementSim::provision(ByteView seed,
                                                                    std::uint64_t chip_id) {
  if (seed.empty()) throw Error(Errc::kInvalidArgument, "secure element seed is empty");
  auto key = crypto::SigningKey::p256_from_scalar(crypto::p256::scalar_from_seed(seed));
  return std::shared_ptr<const SecureElementSim>(new SecureElementSim(std::move(key), chip_id));
}

Bytes SecureElementSim::binding_message(ByteView ek_public, std::uint64_t chip_id) {
  Bytes msg(ek_public.begin(), ek_public.end());
  append(msg, be_bytes(chip_id, 8));
  return msg;
}

Bytes SecureElementSim::sign(ByteView message) const {
  std::lock_guard lock(mu_);
  return ek_.sign(message);
}

// ---------------------------------------------------------------- state

const GpioPin* DeviceState::find_pin(unsigned pin_number) const {
  for (const auto& p : gpio_bank) {
    if (p.pin_number == pin_number) return &p;
  }
  return nullptr;
}

bool operator==(const DeviceState& a, const DeviceState& b) {
  auto se_equal = [](const auto& x, const auto& y) {
    if (!x || !y) return x == y;
    return x->ek_public() == y->ek_public() && x->device_binding_sig() == y->device_binding_sig() &&
           x->bound_chip_id() == y->bound_chip_id();
  };
  return a.chip_id == b.chip_id && a.flash_id == b.flash_id && a.eth_mac == b.eth_mac &&
         a.wifi_mac == b.wifi_mac && a.bt_mac == b.bt_mac && a.firmware_image == b.firmware_image &&
         a.bootloader_image == b.bootloader_image && a.elf_image == b.elf_image &&
         a.secure_boot_pubkey == b.secure_boot_pubkey &&
         a.secure_boot_enabled == b.secure_boot_enabled && a.gpio_bank == b.gpio_bank &&
         a.platform == b.platform && se_equal(a.secure_element, b.secure_element);
}

namespace {

void check_macs(const Mac& eth, const Mac& wifi, const Mac& bt) {
  if (eth == wifi || eth == bt || wifi == bt) {
    throw Error(Errc::kDuplicateMac, "Ethernet, Wi-Fi and Bluetooth MACs must be distinct");
  }
}

}  // namespace

Bytes sample_image(std::string_view label, std::size_t size) {
  Bytes out;
  out.reserve(size + 32);
  for (std::uint32_t counter = 0; out.size() < size; ++counter) {
    Bytes block = to_bytes(label);
    append(block, be_bytes(counter, 4));
    append(out, crypto::sha256(block));
  }
  out.resize(size);
  return out;
}

DeviceSpec reference_spec() {
  DeviceSpec s;
  s.chip_id = 2113559;
  s.flash_id = 2958321;
  s.eth_mac = parse_mac("f4:12:fa:e3:91:ef");
  s.wifi_mac = parse_mac("f4:12:fa:e3:91:ec");
  s.bt_mac = parse_mac("f4:12:fa:e3:91:ee");
  s.firmware_image = sample_image("reference/firmware", 4096);
  s.bootloader_image = sample_image("reference/bootloader", 2048);
  s.elf_image = sample_image("reference/elf", 8192);
  s.secure_boot_pubkey = sample_image("reference/secure-boot-rsa3072", 388);
  static constexpr std::uint8_t kLevels[] = {1, 0, 0, 1, 0, 1};
  for (unsigned pin = 0; pin < kDefaultGpioCount; ++pin) {
    GpioPin p;
    p.pin_number = static_cast<std::uint8_t>(pin);
    // GPIO22-25 are not bonded out on the S3.
    p.direction = (pin >= 22 && pin <= 25) ? Direction::kDisabled : Direction::kInput;
    p.level = (pin < std::size(kLevels) && p.direction != Direction::kDisabled) ? kLevels[pin] : 0;
    s.gpio_bank.push_back(p);
  }
  s.platform = {"Espressif Systems", "ESP32-S3", "v0.2", "ESP32S3-2113559", std::nullopt};
  s.secure_element.seed = to_bytes("reference/atecc608b");
  return s;
}

DeviceSpec randomized_spec(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto random_mac = [&] {
    Mac m;
    for (auto& b : m) b = static_cast<std::uint8_t>(rng());
    m[0] = static_cast<std::uint8_t>((m[0] & 0xFC) | 0x02);  // locally administered unicast
    return m;
  };
  const std::string tag = "random/" + std::to_string(seed) + "/";
  DeviceSpec s;
  s.chip_id = rng() & 0xFFFFFF;
  s.flash_id = rng() & 0xFFFFFFFF;
  s.eth_mac = random_mac();
  do s.wifi_mac = random_mac(); while (s.wifi_mac == s.eth_mac);
  do s.bt_mac = random_mac(); while (s.bt_mac == s.eth_mac || s.bt_mac == s.wifi_mac);
  s.firmware_image = sample_image(tag + "firmware", 256 + rng() % 4096);
  s.bootloader_image = sample_image(tag + "bootloader", 128 + rng() % 1024);
  s.elf_image = sample_image(tag + "elf", 256 + rng() % 4096);
  s.secure_boot_enabled = rng() % 4 != 0;
  if (s.secure_boot_enabled) s.secure_boot_pubkey = sample_image(tag + "secure-boot", 388);
  const unsigned count = 8 + static_cast<unsigned>(rng() % (kDefaultGpioCount - 7));
  for (unsigned pin = 0; pin < count; ++pin) {
    GpioPin p;
    p.pin_number = static_cast<std::uint8_t>(pin);
    switch (rng() % 5) {
      case 0:
        p.direction = Direction::kDisabled;
        break;
      case 1:
      case 2:
        p.direction = Direction::kOutput;
        break;
      default:
        p.direction = Direction::kInput;
    }
    p.level = p.direction == Direction::kDisabled ? 0 : static_cast<std::uint8_t>(rng() & 1);
    s.gpio_bank.push_back(p);
  }
  s.platform = {"Espressif Systems", "ESP32-S3", "v0.2", "ESP32S3-" + std::to_string(s.chip_id), std::nullopt};
  s.secure_element.seed = sample_image(tag + "secure-element", 32);
  return s;
}

DeviceState new_device(const DeviceSpec& spec) {
  check_macs(spec.eth_mac, spec.wifi_mac, spec.bt_mac);
  if (spec.firmware_image.empty() || spec.bootloader_image.empty() || spec.elf_image.empty()) {
    throw Error(Errc::kEmptyImage, "firmware, bootloader and ELF images must be non-empty");
  }
  if (spec.secure_boot_enabled && spec.secure_boot_pubkey.empty()) {
    throw Error(Errc::kEmptyImage, "secure boot is enabled but the public key is empty");
  }
  if (spec.gpio_bank.empty()) throw Error(Errc::kNoGpioPins, "GPIO bank has no pins");
  if (!spec.reproducible_build) {
    throw Error(Errc::kConfig, "reproducible_build must be enabled for attestation");
  }
  std::set<unsigned> seen;
  for (const auto& p : spec.gpio_bank) {
    if (!seen.insert(p.pin_number).second) {
      throw Error(Errc::kDuplicatePin, "GPIO " + std::to_string(p.pin_number) + " declared twice");
    }
    if (p.level > 1) throw Error(Errc::kInvalidArgument, "GPIO level must be 0 or 1");
  }

  DeviceState s;
  s.chip_id = spec.chip_id;
  s.flash_id = spec.flash_id;
  s.eth_mac = spec.eth_mac;
  s.wifi_mac = spec.wifi_mac;
  s.bt_mac = spec.bt_mac;
  s.firmware_image = spec.firmware_image;
  s.bootloader_image = spec.bootloader_image;
  s.elf_image = spec.elf_image;
  s.secure_boot_pubkey = spec.secure_boot_pubkey;
  s.secure_boot_enabled = spec.secure_boot_enabled;
  s.gpio_bank = spec.gpio_bank;
  std::sort(s.gpio_bank.begin(), s.gpio_bank.end(),
            [](const GpioPin& a, const GpioPin& b) { return a.pin_number < b.pin_number; });
  for (auto& p : s.gpio_bank) {
    if (p.direction == Direction::kDisabled) p.level = 0;
  }
  s.platform = spec.platform;
  s.secure_element = SecureElementSim::provision(
      spec.secure_element.seed, spec.secure_element.bound_chip_id.value_or(spec.chip_id));
  return s;
}

// ---------------------------------------------------------------- tampering

DeviceState tamper_gpio(const DeviceState& state, unsigned pin, unsigned level) {
  if (level > 1) throw Error(Errc::kInvalidArgument, "GPIO level must be 0 or 1");
  DeviceState out = state;
  for (auto& p : out.gpio_bank) {
    if (p.pin_number != pin) continue;
    if (p.direction == Direction::kDisabled) {
      throw Error(Errc::kDisabledPin, "GPIO " + std::to_string(pin) + " is disabled");
    }
    p.level = static_cast<std::uint8_t>(level);
    return out;
  }
  throw Error(Errc::kUnknownPin, "GPIO " + std::to_string(pin) + " does not exist");
}

DeviceState tamper_firmware(const DeviceState& state, std::size_t offset, ByteView replacement) {
  const auto size = state.firmware_image.size();
  if (offset > size || replacement.size() > size - offset) {
    throw Error(Errc::kPatchOutOfRange, "patch of " + std::to_string(replacement.size()) +
                                            " bytes at offset " + std::to_string(offset) +
                                            " exceeds the " + std::to_string(size) + "-byte image");
  }
  DeviceState out = state;
  std::copy(replacement.begin(), replacement.end(),
            out.firmware_image.begin() + static_cast<std::ptrdiff_t>(offset));
  return out;
}

DeviceState tamper_elf(const DeviceState& state, ByteView appended_section) {
  if (appended_section.empty()) throw Error(Errc::kEmptySection, "appended section is empty");
  DeviceState out = state;
  append(out.elf_image, appended_section);
  append(out.firmware_image, crypto::sha256(appended_section));
  return out;
}

DeviceState swap_identity(const DeviceState& state, const Identity& identity) {
  check_macs(identity.eth_mac, identity.wifi_mac, identity.bt_mac);
  DeviceState out = state;
  out.eth_mac = identity.eth_mac;
  out.wifi_mac = identity.wifi_mac;
  out.bt_mac = identity.bt_mac;
  out.chip_id = identity.chip_id;
  return out;
}

DeviceState swap_identity(const DeviceState& state, std::string_view eth_mac,
                          std::string_view wifi_mac, std::string_view bt_mac,
                          std::uint64_t chip_id) {
  return swap_identity(state, Identity{parse_mac(eth_mac), parse_mac(wifi_mac), parse_mac(bt_mac), chip_id});
}

Identity identity_of(const DeviceState& state) {
  return {state.eth_mac, state.wifi_mac, state.bt_mac, state.chip_id};
}

std::string describe(const DeviceState& state) {
  nlohmann::json j;
  j["chip_id"] = state.chip_id;
  j["flash_id"] = state.flash_id;
  j["eth_mac"] = format_mac(state.eth_mac);
  j["wifi_mac"] = format_mac(state.wifi_mac);
  j["bt_mac"] = format_mac(state.bt_mac);
  j["firmware_sha256"] = to_hex(crypto::sha256(state.firmware_image));
  j["bootloader_sha256"] = to_hex(crypto::sha256(state.bootloader_image));
  j["elf_sha256"] = to_hex(crypto::sha256(state.elf_image));
  j["secure_boot_enabled"] = state.secure_boot_enabled;
  if (state.secure_boot_enabled) {
    j["secure_boot_pk_sha256"] = to_hex(crypto::sha256(state.secure_boot_pubkey));
  }
  auto& pins = j["gpio"] = nlohmann::json::array();
  for (const auto& p : state.gpio_bank) {
    pins.push_back({{"pin", p.pin_number}, {"direction", to_string(p.direction)}, {"level", p.level}});
  }
  j["platform"] = {{"manufacturer", state.platform.manufacturer},
                   {"model", state.platform.model},
                   {"version", state.platform.version},
                   {"serial", state.platform.serial}};
  if (state.secure_element) {
    j["ek_public"] = to_hex(state.secure_element->ek_public());
    j["ek_binding_sig"] = to_hex(state.secure_element->device_binding_sig());
  }
  return j.dump(2);
}

}  // namespace pac::device
