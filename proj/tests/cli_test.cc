//
// Copyright 2026 The Gausstimate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "gausstimate/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"

namespace gausstimate {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void Write(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

int Lines(const std::string& text) {
  return static_cast<int>(std::count(text.begin(), text.end(), '\n'));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  std::string Path(const std::string& name) const {
    return (dir_ / name).string();
  }
  fs::path dir_;
};

TEST_F(CliTest, SimulateWritesOneRowPerTrial) {
  const Outcome o =
      Cli({"simulate", "--protocol", "kv2", "--n", "2^14", "--eps", "1",
           "--mu", "3", "--sigma", "1", "--trials", "50", "--seed", "5",
           "--workers", "2", "--out", Path("a")});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const std::string results = Slurp(dir_ / "a" / "results.csv");
  EXPECT_EQ(Lines(results), 51);
  EXPECT_EQ(Lines(Slurp(dir_ / "a" / "summary.csv")), 2);
  EXPECT_NE(o.out.find("median_error="), std::string::npos);
}

TEST_F(CliTest, SimulateIsByteIdenticalAcrossRuns) {
  for (const char* sub : {"a", "b"}) {
    const Outcome o =
        Cli({"simulate", "--protocol", "uv1", "--n", "16384", "--mu", "1.5",
             "--sigma", "1.5", "--sigma-min", "1", "--sigma-max", "2",
             "--trials", "5", "--seed", "11", "--out", Path(sub),
             "--transcript", Path(std::string(sub) + ".jsonl")});
    ASSERT_EQ(o.code, kExitOk) << o.err;
  }
  EXPECT_EQ(Slurp(dir_ / "a" / "results.csv"),
            Slurp(dir_ / "b" / "results.csv"));
  EXPECT_EQ(Slurp(dir_ / "a" / "summary.csv"),
            Slurp(dir_ / "b" / "summary.csv"));
  EXPECT_EQ(Slurp(dir_ / "a.jsonl"), Slurp(dir_ / "b.jsonl"));
}

TEST_F(CliTest, SimulateUsageErrors) {
  EXPECT_EQ(Cli({"simulate", "--protocol", "kv2", "--n", "16384",
                 "--sigma-min", "1", "--out", Path("x")})
                .code,
            kExitUsage);
  EXPECT_EQ(Cli({"simulate", "--protocol", "kv5", "--n", "16384"}).code,
            kExitUsage);
  EXPECT_EQ(Cli({"simulate", "--protocol", "kv2", "--n", "16385"}).code,
            kExitUsage);
  EXPECT_EQ(Cli({"simulate", "--protocol", "kv2", "--n", "abc"}).code,
            kExitUsage);
  EXPECT_EQ(Cli({"simulate", "--protocol", "kv2", "--n", "16384", "--k2",
                 "100"})
                .code,
            kExitUsage);
  EXPECT_EQ(Cli({"simulate", "--protocol", "kv1", "--n", "64"}).code,
            kExitUsage);
  EXPECT_EQ(Cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Cli({}).code, kExitUsage);
}

TEST_F(CliTest, HelpExitsCleanly) {
  const Outcome o = Cli({"--help"});
  EXPECT_EQ(o.code, kExitOk);
  EXPECT_NE(o.out.find("simulate"), std::string::npos);
}

TEST_F(CliTest, SweepReportsSlopes) {
  const Outcome two = Cli({"sweep", "--protocol", "kv2", "--n-grid",
                           "2^13,2^14", "--eps-grid", "1", "--mu-grid", "2",
                           "--sigma-grid", "1", "--trials", "4", "--out",
                           Path("s")});
  ASSERT_EQ(two.code, kExitOk) << two.err;
  EXPECT_EQ(Lines(Slurp(dir_ / "s" / "summary.csv")), 3);
  EXPECT_EQ(two.out.find("absent"), std::string::npos) << two.out;
  EXPECT_NE(two.out.find("slope eps=1 mu=2 sigma=1: "), std::string::npos);

  const Outcome one = Cli({"sweep", "--protocol", "kv2", "--n-grid", "2^13",
                           "--trials", "2", "--out", Path("t")});
  ASSERT_EQ(one.code, kExitOk) << one.err;
  EXPECT_NE(one.out.find(": absent"), std::string::npos) << one.out;
}

TEST_F(CliTest, SweepNamesTheFailingCell) {
  const Outcome o = Cli({"sweep", "--protocol", "kv1", "--n-grid",
                         "2^14,64", "--trials", "1", "--out", Path("u")});
  EXPECT_EQ(o.code, kExitUsage);
  EXPECT_NE(o.err.find("n=64"), std::string::npos) << o.err;
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  setenv(kOutDirEnv, Path("env").c_str(), 1);
  const Outcome o = Cli({"simulate", "--protocol", "kv2", "--n", "2^13",
                         "--trials", "1"});
  unsetenv(kOutDirEnv);
  ASSERT_EQ(o.code, kExitOk) << o.err;
  EXPECT_TRUE(fs::exists(dir_ / "env" / "results.csv"));
}

TEST_F(CliTest, AuditPassesByDefault) {
  const Outcome o = Cli({"audit"});
  EXPECT_EQ(o.code, kExitOk) << o.err;
  // Five randomizers at five eps values.
  EXPECT_EQ(Lines(o.out), 25);
  EXPECT_EQ(o.out.find("FAIL"), std::string::npos);
}

TEST_F(CliTest, AuditRejectsBadEps) {
  EXPECT_EQ(Cli({"audit", "--eps", "0"}).code, kExitUsage);
  EXPECT_EQ(Cli({"audit", "--eps", "1,-2"}).code, kExitUsage);
  EXPECT_EQ(Cli({"audit", "--eps", "inf"}).code, kExitUsage);
  EXPECT_EQ(Cli({"audit", "--eps", "ln3"}).code, kExitOk);
}

TEST_F(CliTest, ReplayRoundTrip) {
  for (const char* protocol : {"kv2", "kv1", "uv2", "uv1"}) {
    const std::string transcript = Path(std::string(protocol) + ".jsonl");
    std::vector<std::string> args = {
        "simulate", "--protocol", protocol, "--n", "2^14", "--mu", "2",
        "--trials", "1", "--out", Path("o"), "--transcript", transcript};
    if (protocol[0] == 'u') {
      args.insert(args.end(), {"--sigma-min", "1", "--sigma-max", "2"});
    }
    const Outcome sim = Cli(args);
    ASSERT_EQ(sim.code, kExitOk) << sim.err;
    const Outcome replay = Cli({"replay", "--transcript", transcript});
    EXPECT_EQ(replay.code, kExitOk) << protocol << ": " << replay.err;
    EXPECT_NE(replay.out.find("replay ok"), std::string::npos);
  }
}

TEST_F(CliTest, ReplayFlagsTamperingAndTruncation) {
  const std::string transcript = Path("t.jsonl");
  ASSERT_EQ(Cli({"simulate", "--protocol", "kv2", "--n", "2^14", "--mu", "2",
                 "--trials", "1", "--out", Path("o"), "--transcript",
                 transcript})
                .code,
            kExitOk);
  const std::string text = Slurp(transcript);

  // Flip the first round-two sign.
  std::string tampered = text;
  const size_t at = tampered.find("\"kind\":\"sign\",\"value\":");
  ASSERT_NE(at, std::string::npos);
  const size_t value = at + std::string("\"kind\":\"sign\",\"value\":").size();
  if (tampered[value] == '-') {
    tampered.erase(value, 1);
  } else {
    tampered.insert(value, "-");
  }
  Write(Path("tampered.jsonl"), tampered);
  const Outcome mismatch =
      Cli({"replay", "--transcript", Path("tampered.jsonl")});
  EXPECT_EQ(mismatch.code, kExitFailure);
  EXPECT_NE(mismatch.err.find("mu_hat2"), std::string::npos) << mismatch.err;

  Write(Path("cut.jsonl"), text.substr(0, text.size() / 2));
  EXPECT_EQ(Cli({"replay", "--transcript", Path("cut.jsonl")}).code,
            kExitUsage);
  EXPECT_EQ(Cli({"replay", "--transcript", Path("missing.jsonl")}).code,
            kExitUsage);
  EXPECT_EQ(Cli({"replay"}).code, kExitUsage);
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  Write(Path("cfg.json"),
        "{\"protocol\": \"kv2\", \"n\": 16384, \"trials\": 3, \"mu\": 2.5,"
        " \"seed\": 9}");
  const Outcome from_file = Cli({"simulate", "--config", Path("cfg.json"),
                                 "--out", Path("f")});
  ASSERT_EQ(from_file.code, kExitOk) << from_file.err;
  EXPECT_EQ(Lines(Slurp(dir_ / "f" / "results.csv")), 4);

  const Outcome overridden =
      Cli({"simulate", "--config", Path("cfg.json"), "--trials", "2",
           "--out", Path("g")});
  ASSERT_EQ(overridden.code, kExitOk) << overridden.err;
  EXPECT_EQ(Lines(Slurp(dir_ / "g" / "results.csv")), 3);
  // Same seed, so the shared trials agree.
  const std::string f = Slurp(dir_ / "f" / "results.csv");
  const std::string g = Slurp(dir_ / "g" / "results.csv");
  EXPECT_EQ(f.substr(0, g.size()), g);

  Write(Path("bad.json"), "{\"protocol\": ");
  EXPECT_EQ(Cli({"simulate", "--config", Path("bad.json")}).code, kExitUsage);
  Write(Path("nested.json"), "{\"grid\": {\"n\": 1}}");
  EXPECT_EQ(Cli({"simulate", "--config", Path("nested.json")}).code,
            kExitUsage);
}

}  // namespace
}  // namespace gausstimate
