// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include "pac/complist.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <tuple>

#include <json.hpp>

#include "pac/der.hpp"
#include "pac/error.hpp"
#include "pac/measure.hpp"

namespace pac::complist {

using nlohmann::json;

bool is_known_class(std::uint32_t value) {
  using namespace measure::component_class;
  switch (value) {
    case kEmbeddedProcessor:
    case kFlashMemory:
    case kEthernetAdapter:
    case kWifiAdapter:
    case kBluetoothAdapter:
    case kFirmware:
    case kBootloader:
    case kSoftware:
    case kGpio:
      return true;
    default:
      return false;
  }
}

namespace {

bool canonical_less(const ComponentIdentifier& a, const ComponentIdentifier& b) {
  return std::tie(a.component_class.value, a.serial) < std::tie(b.component_class.value, b.serial);
}

// Total order used inside correlation groups.
auto full_key(const ComponentIdentifier& c) {
  return std::tie(c.component_class.value, c.component_class.registry, c.model, c.serial,
                  c.revision, c.manufacturer, c.field_replaceable);
}

}  // namespace

void canonicalize(ComponentList& list) {
  for (const auto& c : list.components) {
    if (c.serial.empty()) {
      throw Error(Errc::kInvalidArgument, "component " + c.model + " has an empty serial");
    }
  }
  std::sort(list.components.begin(), list.components.end(), canonical_less);
  for (std::size_t i = 1; i < list.components.size(); ++i) {
    const auto& a = list.components[i - 1];
    const auto& b = list.components[i];
    if (a.component_class.value == b.component_class.value && a.serial == b.serial) {
      throw Error(Errc::kDuplicateComponent, "duplicate component " +
                                                 measure::class_hex(a.component_class.value) + "/" + a.serial);
    }
  }
}

bool is_canonical(const ComponentList& list) {
  for (std::size_t i = 0; i < list.components.size(); ++i) {
    if (list.components[i].serial.empty()) return false;
    if (i && !canonical_less(list.components[i - 1], list.components[i])) return false;
  }
  return true;
}

ComponentList parse_log(std::string_view text, const PlatformMeta& platform) {
  ComponentList list;
  list.platform = platform;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto fail = [&](const std::string& what, Errc code = Errc::kMalformedLog) {
    throw Error(code, "line " + std::to_string(line_no) + ": " + what);
  };
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.starts_with("EK_PUBLIC=") || line.starts_with("EK_BINDING=") ||
        line.starts_with("NONCE=") || line.starts_with("EK_QUOTE=")) {
      continue;
    }
    if (!line.starts_with("CLASS=")) fail("unrecognised line");
    auto bar = line.find("|LABEL=");
    if (bar == std::string_view::npos) fail("expected |LABEL=");
    auto cls = line.substr(6, bar - 6);
    std::uint32_t value = 0;
    auto r = std::from_chars(cls.data(), cls.data() + cls.size(), value, 16);
    if (cls.size() != 8 || r.ec != std::errc() || r.ptr != cls.data() + cls.size()) {
      fail("component class '" + std::string(cls) + "' is not a 4-byte hex value", Errc::kUnknownClass);
    }
    auto rest = line.substr(bar + 7);
    auto vbar = rest.find("|VALUE=");
    if (vbar == std::string_view::npos) fail("expected |VALUE=");
    ComponentIdentifier c;
    c.component_class.value = value;
    c.manufacturer = platform.manufacturer;
    c.model = rest.substr(0, vbar);
    c.serial = rest.substr(vbar + 7);
    if (c.model.empty()) fail("empty label");
    if (c.serial.empty()) fail("empty value for " + c.model);
    if (!der::is_valid_utf8(c.model) || !der::is_valid_utf8(c.serial)) fail("invalid UTF-8");
    list.components.push_back(std::move(c));
  }
  canonicalize(list);
  return list;
}

// ---------------------------------------------------------------- JSON

std::string to_canonical_json(const ComponentList& list) {
  json platform = {{"manufacturer", list.platform.manufacturer},
                   {"model", list.platform.model},
                   {"serial", list.platform.serial},
                   {"version", list.platform.version}};
  if (list.platform.manufacturer_id) platform["manufacturerId"] = *list.platform.manufacturer_id;
  json components = json::array();
  for (const auto& c : list.components) {
    json j = {{"componentClass", measure::class_hex(c.component_class.value)},
              {"componentClassRegistry", c.component_class.registry},
              {"fieldReplaceable", c.field_replaceable},
              {"manufacturer", c.manufacturer},
              {"model", c.model},
              {"serial", c.serial}};
    if (c.revision) j["revision"] = *c.revision;
    components.push_back(std::move(j));
  }
  // nlohmann::json objects are std::map-backed: keys come out sorted.
  json doc = {{"components", std::move(components)}, {"platform", std::move(platform)}};
  return doc.dump(-1, ' ', false, json::error_handler_t::strict);
}

namespace {

std::string get_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(Errc::kInvalidArgument, std::string("componentlist: missing string '") + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

ComponentList from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("componentlist: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("platform") || !doc.contains("components") ||
      !doc["components"].is_array()) {
    throw Error(Errc::kInvalidArgument, "componentlist: expected platform and components");
  }
  ComponentList list;
  const auto& p = doc["platform"];
  list.platform.manufacturer = get_string(p, "manufacturer");
  list.platform.model = get_string(p, "model");
  list.platform.serial = get_string(p, "serial");
  list.platform.version = get_string(p, "version");
  if (p.contains("manufacturerId")) list.platform.manufacturer_id = get_string(p, "manufacturerId");
  for (const auto& j : doc["components"]) {
    ComponentIdentifier c;
    auto cls = get_string(j, "componentClass");
    auto r = std::from_chars(cls.data(), cls.data() + cls.size(), c.component_class.value, 16);
    if (cls.size() != 8 || r.ec != std::errc() || r.ptr != cls.data() + cls.size()) {
      throw Error(Errc::kUnknownClass, "componentlist: bad componentClass '" + cls + "'");
    }
    c.component_class.registry = get_string(j, "componentClassRegistry");
    c.manufacturer = get_string(j, "manufacturer");
    c.model = get_string(j, "model");
    c.serial = get_string(j, "serial");
    if (j.contains("revision")) c.revision = get_string(j, "revision");
    auto fr = j.find("fieldReplaceable");
    if (fr == j.end() || !fr->is_boolean()) {
      throw Error(Errc::kInvalidArgument, "componentlist: missing boolean 'fieldReplaceable'");
    }
    c.field_replaceable = fr->get<bool>();
    list.components.push_back(std::move(c));
  }
  canonicalize(list);
  return list;
}

// ---------------------------------------------------------------- diff

std::string_view to_string(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::kAdded: return "ADDED";
    case ChangeKind::kRemoved: return "REMOVED";
    case ChangeKind::kModified: return "MODIFIED";
  }
  return "MODIFIED";
}

Correlation correlate(const ComponentList& before, const ComponentList& after) {
  using Key = std::pair<std::uint32_t, std::string>;
  std::map<Key, std::pair<std::vector<ComponentIdentifier>, std::vector<ComponentIdentifier>>> groups;
  for (const auto& c : before.components) groups[{c.component_class.value, c.model}].first.push_back(c);
  for (const auto& c : after.components) groups[{c.component_class.value, c.model}].second.push_back(c);

  auto less = [](const ComponentIdentifier& a, const ComponentIdentifier& b) { return full_key(a) < full_key(b); };
  Correlation out;
  for (auto& [key, group] : groups) {
    auto& [olds, news] = group;
    std::sort(olds.begin(), olds.end(), less);
    std::sort(news.begin(), news.end(), less);
    std::vector<ComponentIdentifier> old_rest, new_rest;
    // Exact matches first (sorted merge).
    std::size_t i = 0, j = 0;
    while (i < olds.size() && j < news.size()) {
      if (olds[i] == news[j]) {
        out.pairs.emplace_back(olds[i++], news[j++]);
      } else if (less(olds[i], news[j])) {
        old_rest.push_back(olds[i++]);
      } else {
        new_rest.push_back(news[j++]);
      }
    }
    old_rest.insert(old_rest.end(), olds.begin() + static_cast<std::ptrdiff_t>(i), olds.end());
    new_rest.insert(new_rest.end(), news.begin() + static_cast<std::ptrdiff_t>(j), news.end());
    const std::size_t common = std::min(old_rest.size(), new_rest.size());
    for (std::size_t k = 0; k < common; ++k) out.pairs.emplace_back(old_rest[k], new_rest[k]);
    for (std::size_t k = common; k < old_rest.size(); ++k) out.removed.push_back(old_rest[k]);
    for (std::size_t k = common; k < new_rest.size(); ++k) out.added.push_back(new_rest[k]);
  }
  return out;
}

std::vector<ComponentChange> diff(const ComponentList& before, const ComponentList& after) {
  auto corr = correlate(before, after);
  std::vector<ComponentChange> out;
  for (const auto& c : corr.removed) out.push_back({ChangeKind::kRemoved, c, c.serial, std::nullopt});
  for (const auto& [old_c, new_c] : corr.pairs) {
    if (old_c == new_c) continue;
    out.push_back({ChangeKind::kModified, new_c, old_c.serial, new_c.serial});
  }
  for (const auto& c : corr.added) out.push_back({ChangeKind::kAdded, c, std::nullopt, c.serial});
  std::stable_sort(out.begin(), out.end(), [](const ComponentChange& a, const ComponentChange& b) {
    return std::tie(a.identifier.component_class.value, a.identifier.model, a.kind) <
           std::tie(b.identifier.component_class.value, b.identifier.model, b.kind);
  });
  return out;
}

ComponentList apply_changes(ComponentList base, std::span<const ComponentChange> changes) {
  auto& comps = base.components;
  for (const auto& ch : changes) {
    const auto& id = ch.identifier;
    const std::string where = measure::class_hex(id.component_class.value) + "/" + id.model;
    switch (ch.kind) {
      case ChangeKind::kAdded: {
        comps.push_back(id);
        break;
      }
      case ChangeKind::kRemoved: {
        auto it = std::find(comps.begin(), comps.end(), id);
        if (it == comps.end()) throw Error(Errc::kConflictingChange, "REMOVED component absent: " + where);
        comps.erase(it);
        break;
      }
      case ChangeKind::kModified: {
        if (!ch.old_serial) throw Error(Errc::kConflictingChange, "MODIFIED without old serial: " + where);
        auto it = std::find_if(comps.begin(), comps.end(), [&](const ComponentIdentifier& c) {
          return c.component_class.value == id.component_class.value && c.model == id.model &&
                 c.serial == *ch.old_serial;
        });
        if (it == comps.end()) throw Error(Errc::kConflictingChange, "MODIFIED component absent: " + where);
        *it = id;
        break;
      }
    }
  }
  try {
    canonicalize(base);
  } catch (const Error& e) {
    throw Error(Errc::kConflictingChange, e.what());
  }
  return base;
}

}  // namespace pac::complist
