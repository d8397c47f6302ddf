// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "pac/der.hpp"
#include "pac/verify.hpp"

namespace pac::verify {

std::string render_text(const VerificationReport& r) {
  std::ostringstream out;
  auto row = [&](std::string_view key, const std::string& value) {
    out << std::left << std::setw(15) << (std::string(key) + ":") << value << '\n';
  };
  row("device", r.device_id);
  row("approach", std::string(to_string(r.approach)));
  row("verdict", std::string(to_string(r.overall)));
  if (!r.error.empty()) row("error", r.error);
  row("ground truth", to_hex(r.ground_truth_serial));
  row("new cert", to_hex(r.new_cert_serial));
  row("timestamp", der::format_time(r.timestamp));
  row("findings", std::to_string(r.findings.size()));
  for (const auto& f : r.findings) {
    out << "  " << to_string(f.kind);
    if (f.change) {
      const auto& id = f.change->identifier;
      out << "  " << measure::class_hex(id.component_class.value) << ' ' << id.model;
    }
    out << "\n    ground truth | " << (f.expected.empty() ? "-" : f.expected)
        << "\n    measured     | " << (f.actual.empty() ? "-" : f.actual) << '\n';
  }
  return out.str();
}

std::string to_json(const VerificationReport& r) {
  nlohmann::json findings = nlohmann::json::array();
  for (const auto& f : r.findings) {
    nlohmann::json j = {{"kind", to_string(f.kind)}, {"expected", f.expected}, {"actual", f.actual}};
    if (f.change) {
      j["componentClass"] = measure::class_hex(f.change->identifier.component_class.value);
      j["model"] = f.change->identifier.model;
    }
    findings.push_back(std::move(j));
  }
  nlohmann::json j = {{"device_id", r.device_id},
                      {"approach", to_string(r.approach)},
                      {"overall", to_string(r.overall)},
                      {"findings", std::move(findings)},
                      {"ground_truth_serial", to_hex(r.ground_truth_serial)},
                      {"new_cert_serial", to_hex(r.new_cert_serial)},
                      {"timestamp", der::format_time(r.timestamp)}};
  if (!r.error.empty()) j["error"] = r.error;
  return j.dump();
}

}  // namespace pac::verify
