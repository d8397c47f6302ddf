// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

// pacctl: operator front end for the simulated prover, the certificate
// store and the verifier.
//
// Exit codes: 0 success / UNCHANGED, 2 TAMPERED, 1 attestation error,
// 64 usage error, 74 I/O error.

#include <algorithm>
#include <cctype>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pac/certgen.hpp"
#include "pac/der.hpp"
#include "pac/device.hpp"
#include "pac/device_config.hpp"
#include "pac/error.hpp"
#include "pac/issuer.hpp"
#include "pac/net.hpp"
#include "pac/store.hpp"
#include "pac/verify.hpp"

namespace {

using namespace pac;

constexpr int kExitUsage = 64;
constexpr int kExitIo = 74;

int exit_code_for(verify::Verdict v) {
  switch (v) {
    case verify::Verdict::kUnchanged:
      return 0;
    case verify::Verdict::kTampered:
      return 2;
    case verify::Verdict::kError:
      return 1;
  }
  return 1;
}

store::CertStore open_store(const std::string& path) {
  return path.empty() ? store::CertStore::from_environment() : store::CertStore(path);
}

std::string pick_device(const store::CertStore& store, const std::string& requested) {
  if (!requested.empty()) return requested;
  auto devices = store.devices();
  if (devices.size() != 1) {
    throw Error(Errc::kInvalidArgument, "store holds " + std::to_string(devices.size()) +
                                            " devices; choose one with --device-id");
  }
  return devices.front();
}

std::string oid_name(const std::string& oid) {
  auto name = certgen::Profile::project_default().name_of(oid);
  if (!name.empty()) return name;
  if (auto alg = crypto::algorithm_from_oid(oid)) return std::string(crypto::name_of(*alg));
  if (oid == crypto::kOidSha256) return "sha256";
  if (oid == "2.5.4.3") return "commonName";
  if (oid == "2.5.29.19") return "basicConstraints";
  return {};
}

// ---- subcommands ----------------------------------------------------------

struct InitDevice {
  std::string out;
  std::optional<std::uint64_t> random_seed;
  bool force = false;

  int run() const {
    if (!force && std::filesystem::exists(out)) {
      throw Error(Errc::kIo, out + " exists (use --force to overwrite)");
    }
    auto spec = random_seed ? device::randomized_spec(*random_seed) : device::reference_spec();
    device::new_device(spec);  // validate before writing
    device::save_device_spec(out, spec);
    std::cout << "device " << spec.platform.serial << " written to " << out << '\n';
    return 0;
  }
};

struct GenGroundTruth {
  std::string device;
  std::string store_path;
  std::string key_path;
  std::string algorithm = "ecdsa-p256";

  int run() const {
    auto state = device::new_device(device::load_device_spec(device));
    auto store = open_store(store_path);
    store::IssuerMaterial issuer = load_or_create_issuer(store);
    auto pac = verify::provision_ground_truth(state, store, issuer);
    std::cout << "ground truth for " << state.platform.serial << ": serial " << to_hex(pac.tbs.serial_number)
              << ", " << pac.tbs.components.size() << " components, " << certgen::encode_der(pac).size()
              << " bytes DER\n";
    return 0;
  }

  store::IssuerMaterial load_or_create_issuer(store::CertStore& store) const {
    std::optional<crypto::SigningKey> key;
    if (!key_path.empty()) key = crypto::SigningKey::from_pkcs8(store::read_file(key_path));
    if (store.has_issuer()) {
      auto issuer = store.load_issuer();
      if (key && !(key->public_key() == issuer.key.public_key())) {
        throw Error(Errc::kKeyMismatch, "--key differs from the issuer key already in the store");
      }
      return issuer;
    }
    if (!key) {
      crypto::SignatureAlgorithm alg;
      if (algorithm == "ecdsa-p256") {
        alg = crypto::SignatureAlgorithm::kEcdsaP256Sha256;
      } else if (algorithm == "rsa-2048") {
        alg = crypto::SignatureAlgorithm::kRsa2048Pkcs1v15Sha256;
      } else {
        throw Error(Errc::kInvalidArgument, "unknown algorithm '" + algorithm + "'");
      }
      key = crypto::SigningKey::generate(alg);
    }
    auto issuer = store::make_issuer(std::move(*key), certgen::IssuerPolicy{});
    store.save_issuer(issuer);
    return issuer;
  }
};

struct Attest {
  std::string store_path;
  std::string endpoint;
  std::string device;
  std::string device_id;
  std::string approach = "comp";
  bool nonce = false;
  bool json = false;
  int timeout_ms = 10000;

  int run() const {
    if (endpoint.empty() == device.empty()) {
      throw CLI::ValidationError("attest", "exactly one of --endpoint and --device is required");
    }
    verify::SessionOptions options;
    options.approach = verify::parse_approach(approach);
    options.nonce_policy = nonce ? verify::NoncePolicy::kOn : verify::NoncePolicy::kOff;
    options.now = std::time(nullptr);

    auto store = open_store(store_path);
    verify::VerificationReport report;
    report.approach = options.approach;
    report.timestamp = options.now;
    try {
      report.device_id = pick_device(store, device_id);
      auto issuer = store.load_issuer();
      std::unique_ptr<verify::ProverChannel> channel;
      if (!endpoint.empty()) {
        channel = std::make_unique<net::TcpProverChannel>(net::parse_endpoint(endpoint),
                                                          std::chrono::milliseconds(timeout_ms));
      } else {
        channel = std::make_unique<verify::LocalProverChannel>(device::new_device(device::load_device_spec(device)));
      }
      report = verify::run_verification(*channel, store, report.device_id, issuer, options);
    } catch (const Error& e) {
      report.overall = verify::Verdict::kError;
      report.error = e.what();
    }
    std::cout << (json ? verify::to_json(report) + "\n" : verify::render_text(report));
    return exit_code_for(report.overall);
  }
};

struct Tamper {
  std::string device;
  std::vector<std::string> gpio;
  std::vector<std::string> firmware;
  std::string elf_append;
  std::string identity;

  static std::pair<std::string, std::string> split(const std::string& arg, const char* what) {
    auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
      throw CLI::ValidationError(what, "expected key=value, got '" + arg + "'");
    }
    return {arg.substr(0, eq), arg.substr(eq + 1)};
  }

  static unsigned long number(const std::string& text, const char* what) {
    try {
      std::size_t used = 0;
      auto v = std::stoul(text, &used, 0);
      if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw CLI::ValidationError(what, "'" + text + "' is not a number");
  }

  int run() const {
    auto spec = device::load_device_spec(device);
    auto state = device::new_device(spec);
    for (const auto& g : gpio) {
      auto [pin, level] = split(g, "--gpio");
      state = device::tamper_gpio(state, number(pin, "--gpio"), number(level, "--gpio"));
    }
    for (const auto& f : firmware) {
      auto [offset, hex] = split(f, "--firmware");
      state = device::tamper_firmware(state, number(offset, "--firmware"), from_hex(hex));
    }
    if (!elf_append.empty()) {
      auto raw = store::read_file(elf_append);
      std::string text(raw.begin(), raw.end());
      text.erase(std::remove_if(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }),
                 text.end());
      state = device::tamper_elf(state, from_hex(text));
    }
    if (!identity.empty()) {
      auto donor = device::new_device(device::load_device_spec(identity));
      state = device::swap_identity(state, device::identity_of(donor));
    }
    device::save_device_spec(device, device::spec_from_state(state, spec.secure_element, spec.reproducible_build));
    std::cout << "device config " << device << " updated\n";
    return 0;
  }
};

struct Decode {
  std::string file;
  bool raw = false;

  int run() const {
    auto der = store::read_file(file);
    if (!raw) {
      try {
        auto pac = certgen::decode_der(der);
        const auto& t = pac.tbs;
        std::cout << "kind:              " << (t.kind == certgen::PacKind::kBase ? "base" : "delta") << '\n'
                  << "serial:            " << to_hex(t.serial_number) << '\n'
                  << "issuer:            " << t.issuer << '\n'
                  << "validity:          " << der::format_time(t.not_before) << " .. "
                  << der::format_time(t.not_after) << '\n'
                  << "holder EK digest:  " << to_hex(t.holder_ek_digest) << '\n'
                  << "platform:          " << t.platform.manufacturer << ' ' << t.platform.model << ' '
                  << t.platform.version << " (" << t.platform.serial << ")\n"
                  << "signature:         " << crypto::name_of(t.signature_algorithm) << ' '
                  << to_hex(pac.signature) << '\n';
        if (t.kind == certgen::PacKind::kBase) {
          std::cout << "components:        " << t.components.size() << '\n';
          for (const auto& c : t.components) {
            std::cout << "  " << measure::class_hex(c.component_class.value) << "  " << c.model << " = "
                      << c.serial << '\n';
          }
        } else {
          std::cout << "base reference:    " << to_hex(*t.base_certificate_ref) << '\n'
                    << "changes:           " << t.changes.size() << '\n';
          for (const auto& c : t.changes) {
            std::cout << "  " << complist::to_string(c.kind) << "  "
                      << measure::class_hex(c.identifier.component_class.value) << "  " << c.identifier.model
                      << ": " << c.old_serial.value_or("-") << " -> " << c.new_serial.value_or("-") << '\n';
          }
        }
        std::cout << "\nASN.1:\n";
      } catch (const Error& e) {
        std::cerr << "note: not a platform attribute certificate (" << e.what() << ")\n";
      }
    }
    der::dump(der, std::cout, oid_name);
    return 0;
  }
};

struct Delta {
  std::string store_path;
  std::string device_id;

  int run() const {
    auto store = open_store(store_path);
    auto id = pick_device(store, device_id);
    auto pac = verify::issue_delta(store, id, store.load_issuer());
    if (!pac) {
      std::cout << "no changes since the last certificate; no delta issued\n";
      return 0;
    }
    std::cout << "delta " << to_hex(pac->tbs.serial_number) << " -> base "
              << to_hex(*pac->tbs.base_certificate_ref) << ", " << pac->tbs.changes.size() << " change(s)\n";
    for (const auto& c : pac->tbs.changes) {
      std::cout << "  " << complist::to_string(c.kind) << "  "
                << measure::class_hex(c.identifier.component_class.value) << "  " << c.identifier.model << '\n';
    }
    return 0;
  }
};

struct History {
  std::string store_path;
  std::string device_id;

  int run() const {
    auto store = open_store(store_path);
    auto ids = device_id.empty() ? store.devices() : std::vector<std::string>{device_id};
    for (const auto& id : ids) {
      std::cout << id << '\n';
      for (const auto& e : store.entries(id)) {
        const auto& t = e.pac.tbs;
        std::cout << "  " << e.path.filename().string() << "  "
                  << (e.ground_truth ? "ground-truth" : t.kind == certgen::PacKind::kBase ? "base" : "delta")
                  << "  " << to_hex(t.serial_number) << "  sig=" << to_hex(crypto::sha256(e.pac.signature)).substr(0, 16)
                  << '\n';
      }
    }
    return 0;
  }
};

struct Serve {
  std::string device;
  std::string listen = "127.0.0.1:7070";
  bool once = false;

  int run() const {
    auto state = device::new_device(device::load_device_spec(device));
    net::ProverServer server(std::move(state), net::parse_endpoint(listen));
    std::cout << "prover listening on " << net::parse_endpoint(listen).host << ':' << server.port() << std::endl;
    if (once) {
      server.serve_one();
    } else {
      server.serve();
    }
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pacattest: platform attribute certificate attestation"};
  app.require_subcommand(1);

  InitDevice init;
  auto* c_init = app.add_subcommand("init-device", "Write a device config (reference or randomized)");
  c_init->add_option("--out", init.out, "Config file to write")->required();
  c_init->add_option("--random-seed", init.random_seed, "Generate a randomized device from this seed");
  c_init->add_flag("--force", init.force, "Overwrite an existing file");

  GenGroundTruth gen;
  auto* c_gen = app.add_subcommand("gen-ground-truth", "Measure a device and store its base certificate");
  c_gen->add_option("--device", gen.device, "Device config file")->required();
  c_gen->add_option("--out,--store", gen.store_path, "Store directory (default $PAC_STORE)");
  c_gen->add_option("--key", gen.key_path, "Existing PKCS#8 DER signing key");
  c_gen->add_option("--algorithm", gen.algorithm, "Key type when generating: ecdsa-p256 | rsa-2048")
      ->check(CLI::IsMember({"ecdsa-p256", "rsa-2048"}));

  Attest attest;
  auto* c_attest = app.add_subcommand("attest", "Run one attestation session and print the report");
  c_attest->add_option("--store", attest.store_path, "Store directory (default $PAC_STORE)");
  c_attest->add_option("--endpoint", attest.endpoint, "Prover address host:port");
  c_attest->add_option("--device", attest.device, "Attest an in-process device config instead");
  c_attest->add_option("--device-id", attest.device_id, "Device record in the store");
  c_attest->add_option("--approach", attest.approach, "sig | comp")
      ->check(CLI::IsMember({"sig", "comp", "signature", "component"}));
  c_attest->add_flag("--nonce", attest.nonce, "Request a fresh EK quote");
  c_attest->add_flag("--json", attest.json, "Print the report as JSON");
  c_attest->add_option("--timeout-ms", attest.timeout_ms, "Channel timeout")->check(CLI::PositiveNumber);

  Tamper tamper;
  auto* c_tamper = app.add_subcommand("tamper", "Apply tamper operations to a device config");
  c_tamper->add_option("--device", tamper.device, "Device config file")->required();
  c_tamper->add_option("--gpio", tamper.gpio, "pin=level");
  c_tamper->add_option("--firmware", tamper.firmware, "offset=hexbytes");
  c_tamper->add_option("--elf-append", tamper.elf_append, "File with the hex section to append");
  c_tamper->add_option("--identity", tamper.identity, "Device config whose identity is cloned");

  Decode decode;
  auto* c_decode = app.add_subcommand("decode", "Pretty-print a DER certificate");
  c_decode->add_option("file", decode.file, ".pac.der or .cert.der file")->required();
  c_decode->add_flag("--raw", decode.raw, "Only print the ASN.1 tree");

  Delta delta;
  auto* c_delta = app.add_subcommand("delta", "Issue a delta certificate for the latest changes");
  c_delta->add_option("--store", delta.store_path, "Store directory (default $PAC_STORE)");
  c_delta->add_option("--device-id", delta.device_id, "Device record in the store");

  History hist;
  auto* c_hist = app.add_subcommand("history", "List stored certificates");
  c_hist->add_option("--store", hist.store_path, "Store directory (default $PAC_STORE)");
  c_hist->add_option("--device-id", hist.device_id, "Only this device");

  Serve serve;
  auto* c_serve = app.add_subcommand("serve", "Run the prover daemon for a device config");
  c_serve->add_option("--device", serve.device, "Device config file")->required();
  c_serve->add_option("--listen", serve.listen, "host:port (port 0 picks one)");
  c_serve->add_flag("--once", serve.once, "Exit after one connection");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*c_init) return init.run();
    if (*c_gen) return gen.run();
    if (*c_attest) return attest.run();
    if (*c_tamper) return tamper.run();
    if (*c_decode) return decode.run();
    if (*c_delta) return delta.run();
    if (*c_hist) return hist.run();
    if (*c_serve) return serve.run();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "pacctl: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "pacctl: " << e.what() << '\n';
    switch (e.code()) {
      case Errc::kIo:
        return kExitIo;
      case Errc::kInvalidArgument:
        return kExitUsage;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "pacctl: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
