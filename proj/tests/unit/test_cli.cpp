// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "puflab/cli.hpp"
#include "puflab/kv.hpp"

namespace puflab::cli {
namespace {

namespace fs = std::filesystem;

struct Run {
    int code;
    std::string out, err;
};

Run invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("puflab-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string &name) const { return (dir_ / name).string(); }

    std::vector<std::string> gen(const std::string &sub, std::size_t n, const std::string &kind = "photonic") {
        auto r = invoke({"--seed", "5", "--out", path(sub), "gen", "--count", std::to_string(n), "--kind", kind});
        EXPECT_EQ(r.code, kOk) << r.err;
        std::vector<std::string> files;
        for (std::size_t i = 0; i < n; ++i) {
            std::ostringstream name;
            name << "device-" << std::setw(3) << std::setfill('0') << i << ".kv";
            files.push_back(path(sub + "/" + name.str()));
        }
        return files;
    }

    fs::path dir_;
};

TEST_F(CliTest, VersionAndUsage) {
    auto v = invoke({"--version"});
    EXPECT_EQ(v.code, kOk);
    EXPECT_NE(v.out.find(kToolVersion), std::string::npos);
    EXPECT_EQ(invoke({}).code, kValidation);
    EXPECT_EQ(invoke({"frobnicate"}).code, kValidation);
}

TEST_F(CliTest, GenIsDeterministicAndDistinct) {
    auto files = gen("a", 3);
    gen("b", 3);
    std::set<std::string> seeds;
    for (const auto &f : files) {
        auto doc = KeyValueDoc::load(f);
        seeds.insert(doc.get("seed"));
        EXPECT_EQ(slurp(f), slurp(fs::path(f).parent_path().parent_path() / "b" / fs::path(f).filename()));
    }
    EXPECT_EQ(seeds.size(), 3u);
    EXPECT_TRUE(fs::exists(path("a/manifest.txt")));
}

TEST_F(CliTest, GenRejectsInvalidWidth) {
    auto r = invoke({"--out", path("x"), "gen", "--challenge-bits", "3"});
    EXPECT_EQ(r.code, kValidation);
    EXPECT_NE(r.err.find("challenge_bits"), std::string::npos) << r.err;
}

TEST_F(CliTest, MetricsOnPopulation) {
    auto files = gen("devs", 3);
    std::vector<std::string> args{"--out", path("m"), "metrics", "--challenges", "16", "--trials", "3"};
    args.insert(args.end(), files.begin(), files.end());
    auto r = invoke(args);
    ASSERT_EQ(r.code, kOk) << r.err;
    auto doc = KeyValueDoc::load(path("m/metrics.kv"));
    EXPECT_NEAR(doc.get_double("uniqueness"), 0.5, 0.1);
    EXPECT_TRUE(fs::exists(path("m/per_bit.csv")));
}

TEST_F(CliTest, MetricsOfIdenticalDevicesHaveZeroUniqueness) {
    auto files = gen("devs", 1);
    auto r = invoke({"--out", path("m"), "metrics", "--challenges", "8", files[0], files[0]});
    ASSERT_EQ(r.code, kOk) << r.err;
    EXPECT_EQ(KeyValueDoc::load(path("m/metrics.kv")).get_double("uniqueness"), 0.0);
    auto single = invoke({"--out", path("m"), "metrics", files[0]});
    EXPECT_EQ(single.code, kValidation);
    EXPECT_EQ(invoke({"--out", path("m"), "metrics", "--intra-only", "--challenges", "8", files[0]}).code, kOk);
    EXPECT_EQ(invoke({"--out", path("m"), "metrics", files[0], path("missing.kv")}).code, kIo);
}

TEST_F(CliTest, SweepFilterWithCustomGrid) {
    auto files = gen("devs", 2);
    std::ofstream(path("grid.txt")) << "# band\n0,inf\n0.05,0.25\n";
    auto r = invoke({"--out", path("s"), "sweep-filter", "--grid", path("grid.txt"), "--challenges", "16",
                     files[0], files[1]});
    ASSERT_EQ(r.code, kOk) << r.err;
    auto csv = slurp(path("s/sweep.csv"));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    std::ofstream(path("bad.txt")) << "0.3,0.1\n";
    EXPECT_EQ(invoke({"--out", path("s"), "sweep-filter", "--grid", path("bad.txt"), files[0]}).code, kValidation);
}

TEST_F(CliTest, DemoAuthHonest) {
    auto r = invoke({"--out", path("auth"), "demo-auth", "--trials", "10", "--adversary", "replay"});
    ASSERT_EQ(r.code, kOk) << r.err;
    EXPECT_NE(r.out.find("10/10 accepted"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("adversary successes: 0"), std::string::npos);
    for (auto f : {"scenario.kv", "report.kv", "trials.csv", "actions.csv", "manifest.txt"})
        EXPECT_TRUE(fs::exists(path(std::string("auth/") + f))) << f;
    EXPECT_EQ(invoke({"--out", path("auth"), "demo-auth", "--adversary", "sneaky"}).code, kValidation);
}

TEST_F(CliTest, DemoAttestWithImages) {
    std::string golden(5000, 'g'), tampered = golden;
    tampered[1234] = 'x';
    std::ofstream(path("golden.bin"), std::ios::binary) << golden;
    std::ofstream(path("tampered.bin"), std::ios::binary) << tampered;
    auto ok = invoke({"--out", path("at"), "demo-attest", "--golden", path("golden.bin"), "--image",
                      path("golden.bin")});
    EXPECT_EQ(ok.code, kOk) << ok.err;
    auto bad = invoke({"--out", path("at"), "demo-attest", "--golden", path("golden.bin"), "--image",
                       path("tampered.bin")});
    EXPECT_EQ(bad.code, kProtocolFailure);
    EXPECT_NE(bad.out.find("reject(hash-mismatch)"), std::string::npos) << bad.out;
    EXPECT_EQ(KeyValueDoc::load(path("at/attestation.kv")).get("verdict"), "reject");
    EXPECT_EQ(invoke({"--out", path("at"), "demo-attest", "--golden", path("golden.bin")}).code, kValidation);
}

TEST_F(CliTest, AttackSmallBudget) {
    auto r = invoke({"--out", path("atk"), "attack", "--kind", "arbiter", "--train", "500", "--test", "200",
                     "--bits", "2", "--iterations", "100"});
    ASSERT_EQ(r.code, kOk) << r.err;
    EXPECT_TRUE(fs::exists(path("atk/attack.csv")));
    EXPECT_EQ(invoke({"--out", path("atk"), "attack", "--kind", "sram"}).code, kValidation);
}

TEST_F(CliTest, ReplayReproducesOutputs) {
    auto first = invoke({"--seed", "9", "--out", path("r1"), "demo-auth", "--trials", "5", "--adversary",
                         "inject", "--injections", "2"});
    ASSERT_EQ(first.code, kOk) << first.err;
    auto again = invoke({"--out", path("r2"), "replay", path("r1/manifest.txt")});
    ASSERT_EQ(again.code, kOk) << again.err;
    for (auto f : {"report.kv", "trials.csv", "actions.csv", "scenario.kv"})
        EXPECT_EQ(slurp(path(std::string("r1/") + f)), slurp(path(std::string("r2/") + f))) << f;
    EXPECT_EQ(invoke({"replay", path("nothing.txt")}).code, kIo);
}

TEST_F(CliTest, UnwritableOutputIsAnIoError) {
    std::ofstream(path("blocker")) << "x";
    auto r = invoke({"--out", path("blocker/sub"), "gen"});
    EXPECT_EQ(r.code, kIo);
    EXPECT_FALSE(r.err.empty());
}

} // namespace
} // namespace puflab::cli
