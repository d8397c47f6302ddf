// Copyright 2026 The pacattest Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <stdlib.h>
#include <sys/stat.h>

#include <set>
#include <thread>

#include "pac/error.hpp"
#include "pac/store.hpp"
#include "support.hpp"

namespace pac::store {
namespace {

using pac::testing::Verifier;

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return Errc::kInvalidArgument;
}

TEST(Store, IssuerRoundTrip) {
  Verifier v;
  EXPECT_TRUE(v.store.has_issuer());
  auto loaded = v.store.load_issuer();
  EXPECT_TRUE(loaded.key.public_key() == v.issuer.key.public_key());
  EXPECT_EQ(loaded.anchor, v.issuer.anchor);
  EXPECT_EQ(loaded.policy, v.issuer.policy);
  EXPECT_EQ(code_of([&] { v.store.save_issuer(v.issuer); }), Errc::kIo);  // never overwritten
}

TEST(Store, GroundTruthIsUnique) {
  Verifier v;
  auto s = pac::testing::reference_device();
  auto gt = v.provision(s);
  EXPECT_EQ(code_of([&] { v.provision(s); }), Errc::kGroundTruthExists);
  EXPECT_EQ(*v.store.ground_truth(s.platform.serial), gt);
  EXPECT_EQ(v.store.issuer_fingerprint(s.platform.serial), fingerprint(v.issuer.key.public_key()));
}

TEST(Store, AppendNeedsGroundTruth) {
  Verifier v;
  auto s = pac::testing::reference_device();
  auto gt = v.provision(s);
  EXPECT_EQ(code_of([&] { v.store.append("other-device", gt); }), Errc::kNoGroundTruth);
}

TEST(Store, FilesAreReadOnlyAndNeverReplaced) {
  Verifier v;
  auto s = pac::testing::reference_device();
  v.provision(s);
  auto path = v.store.entries(s.platform.serial).front().path;
  struct stat st {};
  ASSERT_EQ(::stat(path.c_str(), &st), 0);
  EXPECT_EQ(st.st_mode & 0222, 0u);
  EXPECT_EQ(code_of([&] { write_new_file(path, Bytes{1}); }), Errc::kIo);
}

TEST(Store, DeviceIdValidation) {
  EXPECT_NO_THROW(check_device_id("ESP32S3-2113559"));
  for (std::string bad : {"", ".", "..", "a/b", "a b", "x\n"}) {
    EXPECT_EQ(code_of([&] { check_device_id(bad); }), Errc::kInvalidArgument) << bad;
  }
}

TEST(Store, ConcurrentWritersGetDistinctSlots) {
  Verifier v;
  auto s = pac::testing::reference_device();
  auto gt = v.provision(s);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      store::CertStore own(v.store.root());  // separate handle, same directory
      for (int i = 0; i < 5; ++i) own.append(s.platform.serial, gt);
    });
  }
  for (auto& t : threads) t.join();
  auto entries = v.store.entries(s.platform.serial);
  ASSERT_EQ(entries.size(), 21u);
  std::set<std::string> names;
  for (const auto& e : entries) names.insert(e.path.filename().string());
  EXPECT_EQ(names.size(), 21u);
  EXPECT_TRUE(entries.front().ground_truth);
}

TEST(Store, DevicesListingAndEnvironment) {
  Verifier v;
  EXPECT_TRUE(v.store.devices().empty());
  v.provision(device::new_device(device::randomized_spec(1)));
  v.provision(device::new_device(device::randomized_spec(2)));
  EXPECT_EQ(v.store.devices().size(), 2u);

  ::setenv(kStoreEnv, v.store.root().c_str(), 1);
  EXPECT_EQ(CertStore::from_environment().devices(), v.store.devices());
  ::unsetenv(kStoreEnv);
  EXPECT_EQ(code_of([] { CertStore::from_environment(); }), Errc::kInvalidArgument);
}

}  // namespace
}  // namespace pac::store
