// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Device configuration files: UTF-8, one `key = value` per line, `#`
// comments. Byte strings are written `hex:<digits>` (or `text:<utf-8>` on
// input). See docs/device-config.md for the key list.

#include <filesystem>
#include <string>
#include <string_view>

#include "pac/device.hpp"

namespace pac::device {

DeviceSpec parse_device_spec(std::string_view text);
std::string render_device_spec(const DeviceSpec& spec);

DeviceSpec load_device_spec(const std::filesystem::path& path);
void save_device_spec(const std::filesystem::path& path, const DeviceSpec& spec);

/// Rebuilds a spec from a (possibly tampered) state; the secure element
/// provisioning record is carried over unchanged.
DeviceSpec spec_from_state(const DeviceState& state, const SecureElementSpec& secure_element,
                           bool reproducible_build = true);

}  // namespace pac::device
