// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

namespace pac {

/// Platform-level identity carried in every certificate.
struct PlatformMeta {
  std::string manufacturer;
  std::string model;
  std::string version;
  std::string serial;
  // Left out of every encoding unless configured.
  std::optional<std::string> manufacturer_id;

  friend bool operator==(const PlatformMeta&, const PlatformMeta&) = default;
};

}  // namespace pac
