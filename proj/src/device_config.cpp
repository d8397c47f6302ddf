// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include "pac/device_config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "pac/error.hpp"

namespace pac::device {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void config_error(std::size_t line, const std::string& what) {
  throw Error(Errc::kConfig, "line " + std::to_string(line) + ": " + what);
}

std::uint64_t parse_uint(std::string_view v, std::size_t line) {
  std::uint64_t out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) config_error(line, "expected an unsigned integer");
  return out;
}

bool parse_bool(std::string_view v, std::size_t line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  config_error(line, "expected true or false");
}

Bytes parse_blob(std::string_view v, std::size_t line) {
  if (v.starts_with("hex:")) {
    try {
      return from_hex(v.substr(4));
    } catch (const Error&) {
      config_error(line, "bad hex blob");
    }
  }
  if (v.starts_with("text:")) return to_bytes(v.substr(5));
  config_error(line, "byte strings need a hex: or text: prefix");
}

struct PinSetting {
  Direction direction = Direction::kInput;
  std::uint8_t level = 0;
};

}  // namespace

DeviceSpec parse_device_spec(std::string_view text) {
  DeviceSpec spec;
  spec.gpio_bank.clear();
  std::size_t gpio_count = kDefaultGpioCount;
  std::map<unsigned, PinSetting> pins;
  bool have_eth = false, have_wifi = false, have_bt = false, have_seed = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) config_error(line_no, "expected key = value");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));

    try {
      if (key == "chip_id") spec.chip_id = parse_uint(value, line_no);
      else if (key == "flash_id") spec.flash_id = parse_uint(value, line_no);
      else if (key == "eth_mac") { spec.eth_mac = parse_mac(value); have_eth = true; }
      else if (key == "wifi_mac") { spec.wifi_mac = parse_mac(value); have_wifi = true; }
      else if (key == "bt_mac") { spec.bt_mac = parse_mac(value); have_bt = true; }
      else if (key == "firmware_image") spec.firmware_image = parse_blob(value, line_no);
      else if (key == "bootloader_image") spec.bootloader_image = parse_blob(value, line_no);
      else if (key == "elf_image") spec.elf_image = parse_blob(value, line_no);
      else if (key == "secure_boot_pubkey") spec.secure_boot_pubkey = parse_blob(value, line_no);
      else if (key == "secure_boot_enabled") spec.secure_boot_enabled = parse_bool(value, line_no);
      else if (key == "reproducible_build") spec.reproducible_build = parse_bool(value, line_no);
      else if (key == "platform.manufacturer") spec.platform.manufacturer = value;
      else if (key == "platform.manufacturer_id") spec.platform.manufacturer_id = std::string(value);
      else if (key == "platform.model") spec.platform.model = value;
      else if (key == "platform.version") spec.platform.version = value;
      else if (key == "platform.serial") spec.platform.serial = value;
      else if (key == "secure_element.seed") { spec.secure_element.seed = parse_blob(value, line_no); have_seed = true; }
      else if (key == "secure_element.bound_chip_id") spec.secure_element.bound_chip_id = parse_uint(value, line_no);
      else if (key == "gpio.count") gpio_count = parse_uint(value, line_no);
      else if (key.starts_with("gpio.")) {
        auto pin = parse_uint(key.substr(5), line_no);
        if (pin > 255) config_error(line_no, "GPIO number out of range");
        PinSetting setting;
        auto colon = value.find(':');
        setting.direction = parse_direction(value.substr(0, colon));
        if (colon != std::string_view::npos) {
          auto level = parse_uint(value.substr(colon + 1), line_no);
          if (level > 1) config_error(line_no, "GPIO level must be 0 or 1");
          setting.level = static_cast<std::uint8_t>(level);
        }
        pins[static_cast<unsigned>(pin)] = setting;
      } else {
        config_error(line_no, "unknown key '" + std::string(key) + "'");
      }
    } catch (const Error& e) {
      if (e.code() == Errc::kConfig) throw;
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  if (!have_eth || !have_wifi || !have_bt) throw Error(Errc::kConfig, "all three MACs are required");
  if (!have_seed) throw Error(Errc::kConfig, "secure_element.seed is required");
  if (gpio_count > 256) throw Error(Errc::kConfig, "gpio.count exceeds 256");
  for (const auto& [pin, _] : pins) {
    if (pin >= gpio_count) {
      throw Error(Errc::kConfig, "gpio." + std::to_string(pin) + " is outside gpio.count");
    }
  }
  for (unsigned pin = 0; pin < gpio_count; ++pin) {
    GpioPin p;
    p.pin_number = static_cast<std::uint8_t>(pin);
    if (auto it = pins.find(pin); it != pins.end()) {
      p.direction = it->second.direction;
      p.level = p.direction == Direction::kDisabled ? 0 : it->second.level;
    }
    spec.gpio_bank.push_back(p);
  }
  return spec;
}

std::string render_device_spec(const DeviceSpec& spec) {
  std::ostringstream out;
  out << "# pacattest simulated device\n";
  out << "chip_id = " << spec.chip_id << '\n';
  out << "flash_id = " << spec.flash_id << '\n';
  out << "eth_mac = " << format_mac(spec.eth_mac) << '\n';
  out << "wifi_mac = " << format_mac(spec.wifi_mac) << '\n';
  out << "bt_mac = " << format_mac(spec.bt_mac) << '\n';
  out << "secure_boot_enabled = " << (spec.secure_boot_enabled ? "true" : "false") << '\n';
  out << "reproducible_build = " << (spec.reproducible_build ? "true" : "false") << '\n';
  out << "platform.manufacturer = " << spec.platform.manufacturer << '\n';
  if (spec.platform.manufacturer_id) {
    out << "platform.manufacturer_id = " << *spec.platform.manufacturer_id << '\n';
  }
  out << "platform.model = " << spec.platform.model << '\n';
  out << "platform.version = " << spec.platform.version << '\n';
  out << "platform.serial = " << spec.platform.serial << '\n';
  out << "secure_element.seed = hex:" << to_hex(spec.secure_element.seed) << '\n';
  if (spec.secure_element.bound_chip_id) {
    out << "secure_element.bound_chip_id = " << *spec.secure_element.bound_chip_id << '\n';
  }
  // Pin numbers need not be contiguous; the count covers the highest one.
  unsigned count = 0;
  for (const auto& p : spec.gpio_bank) count = std::max(count, static_cast<unsigned>(p.pin_number) + 1);
  out << "gpio.count = " << count << '\n';
  for (const auto& p : spec.gpio_bank) {
    out << "gpio." << static_cast<unsigned>(p.pin_number) << " = " << to_string(p.direction);
    if (p.direction != Direction::kDisabled) out << ':' << static_cast<unsigned>(p.level);
    out << '\n';
  }
  out << "firmware_image = hex:" << to_hex(spec.firmware_image) << '\n';
  out << "bootloader_image = hex:" << to_hex(spec.bootloader_image) << '\n';
  out << "elf_image = hex:" << to_hex(spec.elf_image) << '\n';
  out << "secure_boot_pubkey = hex:" << to_hex(spec.secure_boot_pubkey) << '\n';
  return out.str();
}

DeviceSpec load_device_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_device_spec(buf.str());
}

void save_device_spec(const std::filesystem::path& path, const DeviceSpec& spec) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::kIo, "cannot write " + tmp.string());
    out << render_device_spec(spec);
    if (!out) throw Error(Errc::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::kIo, "cannot replace " + path.string() + ": " + ec.message());
}

DeviceSpec spec_from_state(const DeviceState& state, const SecureElementSpec& secure_element,
                           bool reproducible_build) {
  DeviceSpec s;
  s.chip_id = state.chip_id;
  s.flash_id = state.flash_id;
  s.eth_mac = state.eth_mac;
  s.wifi_mac = state.wifi_mac;
  s.bt_mac = state.bt_mac;
  s.firmware_image = state.firmware_image;
  s.bootloader_image = state.bootloader_image;
  s.elf_image = state.elf_image;
  s.secure_boot_pubkey = state.secure_boot_pubkey;
  s.secure_boot_enabled = state.secure_boot_enabled;
  s.gpio_bank = state.gpio_bank;
  s.platform = state.platform;
  s.reproducible_build = reproducible_build;
  s.secure_element = secure_element;
  if (state.secure_element) s.secure_element.bound_chip_id = state.secure_element->bound_chip_id();
  return s;
}

}  // namespace pac::device
