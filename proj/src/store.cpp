// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include "pac/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pac/error.hpp"

namespace pac::store {

namespace fs = std::filesystem;

namespace {

constexpr const char* kGroundTruthMarker = "GROUND_TRUTH";
constexpr const char* kIssuerMarker = "ISSUER";
constexpr const char* kLockFile = ".lock";

class DeviceLock {
 public:
  explicit DeviceLock(const fs::path& dir) {
    fd_ = ::open((dir / kLockFile).c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(Errc::kIo, "cannot open lock in " + dir.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error(Errc::kIo, "cannot lock " + dir.string());
    }
  }
  ~DeviceLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DeviceLock(const DeviceLock&) = delete;
  DeviceLock& operator=(const DeviceLock&) = delete;

 private:
  int fd_ = -1;
};

std::string read_text(const fs::path& p) {
  auto b = read_file(p);
  std::string s(b.begin(), b.end());
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::string sequence_name(std::size_t seq) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.pac.der", seq);
  return buf;
}

}  // namespace

std::string fingerprint(const crypto::PublicKey& key) { return to_hex(crypto::sha256(key.spki())); }

void check_device_id(const std::string& device_id) {
  if (device_id.empty() || device_id == "." || device_id == ".." ||
      device_id.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789._-") !=
          std::string::npos) {
    throw Error(Errc::kInvalidArgument, "device id '" + device_id + "' must match [A-Za-z0-9._-]+");
  }
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_new_file(const fs::path& path, ByteView data) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(Errc::kIo, "cannot create " + path.string() + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < data.size()) {
    auto n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw Error(Errc::kIo, "write failed for " + path.string());
    }
    done += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  ::chmod(path.c_str(), 0444);
}

IssuerMaterial make_issuer(crypto::SigningKey key, const certgen::IssuerPolicy& policy) {
  auto anchor = certgen::self_signed_anchor(policy.issuer_name, key, policy.not_before, policy.validity_seconds);
  return IssuerMaterial{std::move(key), std::move(anchor), {}, policy};
}

CertStore::CertStore(fs::path root) : root_(std::move(root)) {}

CertStore CertStore::from_environment() {
  const char* root = std::getenv(kStoreEnv);
  if (!root || !*root) throw Error(Errc::kInvalidArgument, std::string(kStoreEnv) + " is not set");
  return CertStore(root);
}

bool CertStore::has_issuer() const { return fs::exists(root_ / "issuer" / "signing-key.p8.der"); }

void CertStore::save_issuer(const IssuerMaterial& issuer) {
  auto dir = root_ / "issuer";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + dir.string());
  write_new_file(dir / "signing-key.p8.der", issuer.key.to_pkcs8());
  ::chmod((dir / "signing-key.p8.der").c_str(), 0400);
  write_new_file(dir / "anchor.cert.der", certgen::encode_der(issuer.anchor));
  for (std::size_t i = 0; i < issuer.intermediates.size(); ++i) {
    write_new_file(dir / ("intermediate-" + std::to_string(i) + ".cert.der"),
                   certgen::encode_der(issuer.intermediates[i]));
  }
  nlohmann::json policy = {{"issuer_name", issuer.policy.issuer_name},
                           {"not_before", issuer.policy.not_before},
                           {"validity_seconds", issuer.policy.validity_seconds},
                           {"policy_text", issuer.policy.policy_text}};
  write_new_file(dir / "policy.json", as_bytes(policy.dump(2) + "\n"));
}

IssuerMaterial CertStore::load_issuer() const {
  auto dir = root_ / "issuer";
  if (!has_issuer()) throw Error(Errc::kIo, "no issuer in store " + root_.string());
  auto key = crypto::SigningKey::from_pkcs8(read_file(dir / "signing-key.p8.der"));
  auto anchor = certgen::decode_issuer_der(read_file(dir / "anchor.cert.der"));
  std::vector<certgen::IssuerCertificate> intermediates;
  for (std::size_t i = 0;; ++i) {
    auto p = dir / ("intermediate-" + std::to_string(i) + ".cert.der");
    if (!fs::exists(p)) break;
    intermediates.push_back(certgen::decode_issuer_der(read_file(p)));
  }
  certgen::IssuerPolicy policy;
  try {
    auto j = nlohmann::json::parse(read_text(dir / "policy.json"));
    policy.issuer_name = j.at("issuer_name").get<std::string>();
    policy.not_before = j.at("not_before").get<std::int64_t>();
    policy.validity_seconds = j.at("validity_seconds").get<std::int64_t>();
    policy.policy_text = j.at("policy_text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kIo, std::string("bad policy.json: ") + e.what());
  }
  return IssuerMaterial{std::move(key), std::move(anchor), std::move(intermediates), std::move(policy)};
}

std::vector<std::string> CertStore::devices() const {
  std::vector<std::string> out;
  auto dir = root_ / "devices";
  std::error_code ec;
  if (!fs::exists(dir, ec)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path CertStore::device_dir(const std::string& device_id) const {
  check_device_id(device_id);
  return root_ / "devices" / device_id;
}

fs::path CertStore::append(const std::string& device_id, const certgen::PlatformAttributeCertificate& pac) {
  return write_locked(device_id, pac, nullptr);
}

fs::path CertStore::append_ground_truth(const std::string& device_id,
                                        const certgen::PlatformAttributeCertificate& pac,
                                        const crypto::PublicKey& issuer) {
  return write_locked(device_id, pac, &issuer);
}

fs::path CertStore::write_locked(const std::string& device_id, const certgen::PlatformAttributeCertificate& pac,
                                 const crypto::PublicKey* ground_truth_issuer) {
  const bool ground_truth = ground_truth_issuer != nullptr;
  auto dir = device_dir(device_id);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + dir.string());
  Bytes der = certgen::encode_der(pac);

  DeviceLock lock(dir);
  std::size_t next = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto name = e.path().filename().string();
    if (name.size() == 14 && name.ends_with(".pac.der")) {
      next = std::max<std::size_t>(next, std::stoul(name.substr(0, 6)) + 1);
    }
  }
  const bool has_gt = fs::exists(dir / kGroundTruthMarker);
  if (ground_truth && (has_gt || next != 0)) {
    throw Error(Errc::kGroundTruthExists, "device " + device_id + " already has certificates");
  }
  if (!ground_truth && !has_gt) {
    throw Error(Errc::kNoGroundTruth, "device " + device_id + " has no ground truth");
  }
  auto path = dir / sequence_name(next);
  write_new_file(path, der);
  if (ground_truth) {
    write_new_file(dir / kIssuerMarker, as_bytes(fingerprint(*ground_truth_issuer) + "\n"));
    write_new_file(dir / kGroundTruthMarker, as_bytes(path.filename().string() + "\n"));
  }
  return path;
}

std::optional<certgen::PlatformAttributeCertificate> CertStore::ground_truth(const std::string& device_id) const {
  auto dir = device_dir(device_id);
  if (!fs::exists(dir / kGroundTruthMarker)) return std::nullopt;
  auto name = read_text(dir / kGroundTruthMarker);
  return certgen::decode_der(read_file(dir / name));
}

std::vector<StoredCertificate> CertStore::entries(const std::string& device_id) const {
  auto dir = device_dir(device_id);
  std::vector<StoredCertificate> out;
  std::error_code ec;
  if (!fs::exists(dir, ec)) return out;
  std::string gt_name;
  if (fs::exists(dir / kGroundTruthMarker)) gt_name = read_text(dir / kGroundTruthMarker);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto name = e.path().filename().string();
    if (name.size() == 14 && name.ends_with(".pac.der")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    StoredCertificate sc{f, certgen::decode_der(read_file(f)), f.filename().string() == gt_name};
    out.push_back(std::move(sc));
  }
  std::stable_partition(out.begin(), out.end(), [](const StoredCertificate& s) { return s.ground_truth; });
  return out;
}

std::optional<std::string> CertStore::issuer_fingerprint(const std::string& device_id) const {
  auto p = device_dir(device_id) / kIssuerMarker;
  if (!fs::exists(p)) return std::nullopt;
  return read_text(p);
}

}  // namespace pac::store
