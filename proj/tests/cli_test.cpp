// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

// Drives the pacctl binary end to end.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include "support.hpp"

namespace {

struct Run {
  int rc;
  std::string out;
};

Run run(const std::string& args) {
  std::string cmd = std::string(PACCTL_PATH) + " " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  std::string out;
  char buf[4096];
  while (auto n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

class Cli : public ::testing::Test {
 protected:
  pac::testing::TempDir dir;
  std::string cfg = (dir.path() / "dev.cfg").string();
  std::string store = (dir.path() / "store").string();

  void SetUp() override {
    ASSERT_EQ(run("init-device --out " + cfg).rc, 0);
    auto r = run("gen-ground-truth --device " + cfg + " --out " + store);
    ASSERT_EQ(r.rc, 0) << r.out;
  }
};

TEST_F(Cli, UntouchedDeviceIsUnchanged) {
  for (auto approach : {"sig", "comp"}) {
    auto r = run("attest --store " + store + " --device " + cfg + " --approach " + approach);
    EXPECT_EQ(r.rc, 0) << r.out;
    EXPECT_TRUE(contains(r.out, "UNCHANGED"));
  }
}

TEST_F(Cli, GpioTamperWithSignatureApproach) {
  ASSERT_EQ(run("tamper --device " + cfg + " --gpio 2=1 --gpio 4=1").rc, 0);
  auto r = run("attest --store " + store + " --device " + cfg + " --approach sig");
  EXPECT_EQ(r.rc, 2) << r.out;
  EXPECT_TRUE(contains(r.out, "SIGNATURE_MISMATCH"));
  auto c = run("attest --store " + store + " --device " + cfg + " --approach comp --json");
  EXPECT_EQ(c.rc, 2);
  EXPECT_TRUE(contains(c.out, "\"componentClass\":\"000E0000\""));
}

TEST_F(Cli, FirmwareAndElfTamper) {
  ASSERT_EQ(run("tamper --device " + cfg + " --firmware 16=ff00").rc, 0);
  auto r = run("attest --store " + store + " --device " + cfg);
  EXPECT_EQ(r.rc, 2);
  EXPECT_TRUE(contains(r.out, "00130003 Firmware SHA256"));

  std::ofstream(dir.path() / "section.hex") << "deadbeef\n";
  ASSERT_EQ(run("tamper --device " + cfg + " --elf-append " + (dir.path() / "section.hex").string()).rc, 0);
  r = run("attest --store " + store + " --device " + cfg);
  EXPECT_TRUE(contains(r.out, "00130000 ELF SHA256"));
}

TEST_F(Cli, IdentityCloneIsAnError) {
  auto donor = (dir.path() / "donor.cfg").string();
  ASSERT_EQ(run("init-device --random-seed 7 --out " + donor).rc, 0);
  // The donor body takes on the reference identity but keeps its own EK.
  ASSERT_EQ(run("tamper --device " + donor + " --identity " + cfg).rc, 0);
  auto r = run("attest --store " + store + " --device " + donor + " --device-id ESP32S3-2113559");
  EXPECT_EQ(r.rc, 1) << r.out;
  EXPECT_TRUE(contains(r.out, "EkBindingInvalid"));
}

TEST_F(Cli, DecodeShowsComponentsAndHolder) {
  auto pac = (dir.path() / "store/devices/ESP32S3-2113559/000000.pac.der").string();
  auto r = run("decode " + pac);
  EXPECT_EQ(r.rc, 0);
  EXPECT_TRUE(contains(r.out, "components:        10"));
  EXPECT_TRUE(contains(r.out, "holder EK digest:"));
  EXPECT_TRUE(contains(r.out, "componentIdentifiers"));
}

TEST_F(Cli, DeltaAndHistoryReplay) {
  ASSERT_EQ(run("tamper --device " + cfg + " --gpio 3=0").rc, 0);
  run("attest --store " + store + " --device " + cfg);
  auto d = run("delta --store " + store);
  EXPECT_EQ(d.rc, 0);
  EXPECT_TRUE(contains(d.out, "MODIFIED"));
  auto h1 = run("history --store " + store);
  auto h2 = run("history --store " + store);
  EXPECT_EQ(h1.out, h2.out);
  EXPECT_TRUE(contains(h1.out, "ground-truth"));
  EXPECT_TRUE(contains(h1.out, "delta"));
}

TEST_F(Cli, AttestOverTcp) {
  FILE* srv = ::popen((std::string(PACCTL_PATH) + " serve --once --listen 127.0.0.1:0 --device " + cfg).c_str(), "r");
  ASSERT_NE(srv, nullptr);
  char line[256] = {};
  ASSERT_NE(std::fgets(line, sizeof line, srv), nullptr);
  std::string text(line);
  auto port = text.substr(text.rfind(':') + 1);
  port.erase(port.find_last_not_of("\r\n") + 1);
  auto r = run("attest --store " + store + " --endpoint 127.0.0.1:" + port + " --nonce");
  ::pclose(srv);
  EXPECT_EQ(r.rc, 0) << r.out;
  EXPECT_TRUE(contains(r.out, "UNCHANGED"));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("attest --bogus-flag").rc, 64);
  EXPECT_EQ(run("").rc, 64);
  EXPECT_EQ(run("tamper --device " + cfg + " --gpio nonsense").rc, 64);
  EXPECT_EQ(run("decode /nonexistent/file.pac.der").rc, 74);
  EXPECT_EQ(run("gen-ground-truth --device /nonexistent.cfg --out " + store).rc, 74);
  EXPECT_EQ(run("attest --store " + store + " --endpoint 127.0.0.1:1").rc, 1);
  EXPECT_EQ(run("gen-ground-truth --device " + cfg + " --out " + store).rc, 1);  // ground truth exists
}

TEST_F(Cli, ExistingKeyIsReused) {
  auto other_store = (dir.path() / "store2").string();
  auto key = (dir.path() / "store/issuer/signing-key.p8.der").string();
  auto r = run("gen-ground-truth --device " + cfg + " --out " + other_store + " --key " + key);
  ASSERT_EQ(r.rc, 0) << r.out;
  std::ifstream a(dir.path() / "store/issuer/anchor.cert.der", std::ios::binary);
  std::ifstream b(dir.path() / "store2/issuer/anchor.cert.der", std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
}

}  // namespace
