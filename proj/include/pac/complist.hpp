// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// The componentlist: a canonical, TCG-class-tagged inventory parsed from a
// rendered measurement log, plus the diff/apply machinery behind delta
// certificates. JSON schema: docs/componentlist.md.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pac/platform.hpp"

namespace pac::complist {

inline constexpr std::string_view kTcgRegistry = "TCG Component Class Registry";

struct ComponentClass {
  std::string registry{kTcgRegistry};
  std::uint32_t value = 0;

  friend bool operator==(const ComponentClass&, const ComponentClass&) = default;
};

struct ComponentIdentifier {
  ComponentClass component_class;
  std::string manufacturer;
  std::string model;
  std::string serial;  // the component UID
  std::optional<std::string> revision;
  bool field_replaceable = false;

  friend bool operator==(const ComponentIdentifier&, const ComponentIdentifier&) = default;
};

struct ComponentList {
  PlatformMeta platform;
  std::vector<ComponentIdentifier> components;

  friend bool operator==(const ComponentList&, const ComponentList&) = default;
};

/// True for the classes this platform measures.
bool is_known_class(std::uint32_t value);

/// Canonical order: (class, serial). Throws kDuplicateComponent on a repeated
/// (class, serial) pair and kInvalidArgument on an empty serial.
void canonicalize(ComponentList& list);
bool is_canonical(const ComponentList& list);

/// One component per CLASS line (label -> model, value -> serial); EK lines
/// are accepted and skipped. Well-formed but unregistered class values pass
/// through untouched.
ComponentList parse_log(std::string_view text, const PlatformMeta& platform);

/// Sorted keys, no insignificant whitespace, UTF-8.
std::string to_canonical_json(const ComponentList& list);
ComponentList from_json(std::string_view json);

enum class ChangeKind { kAdded, kRemoved, kModified };

std::string_view to_string(ChangeKind kind);

struct ComponentChange {
  ChangeKind kind = ChangeKind::kModified;
  ComponentIdentifier identifier;  // new value; the removed one for kRemoved
  std::optional<std::string> old_serial;
  std::optional<std::string> new_serial;

  friend bool operator==(const ComponentChange&, const ComponentChange&) = default;
};

/// Components aligned by (class, model). Exact matches pair first; the rest
/// of each group pair up in canonical order, surplus is added/removed.
struct Correlation {
  std::vector<std::pair<ComponentIdentifier, ComponentIdentifier>> pairs;
  std::vector<ComponentIdentifier> removed;
  std::vector<ComponentIdentifier> added;
};

Correlation correlate(const ComponentList& before, const ComponentList& after);

/// Empty iff the component sets are equal.
std::vector<ComponentChange> diff(const ComponentList& before, const ComponentList& after);

/// Replays changes; kConflictingChange when a change does not fit the list.
ComponentList apply_changes(ComponentList base, std::span<const ComponentChange> changes);

}  // namespace pac::complist
