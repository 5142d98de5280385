#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "helpers.hpp"

using testing_support::scenario_path;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the command-line tool with stderr folded into stdout.
Run persuade(const std::string& args) {
  std::string cmd = std::string(PERSUADE_BIN) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string scenario(const std::string& name) { return "--scenario " + scenario_path(name); }

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("persuade-cli-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, SolvePrintsExactCommitmentValue) {
  auto r = persuade("solve " + scenario("e2-near-commitment"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("commitment value: 5/2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("(3/4, 1/4) weight 1/2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("(1/2, 1/2) weight 1/2"), std::string::npos) << r.out;
}

TEST(Cli, ConstructPassesOnGoodScenarios) {
  for (const char* name : {"prosecutor", "e1-full-disclosure", "e1-no-information", "e2-near-commitment", "e1-geometric"}) {
    auto r = persuade("construct " + scenario(name));
    EXPECT_EQ(r.code, 0) << name << "\n" << r.out;
    EXPECT_NE(r.out.find("verdict: PASS"), std::string::npos) << name;
  }
}

TEST(Cli, PoolingOnNonCredibleOptimumExitsOne) {
  auto r = persuade("verify --explain " + scenario("e3-two-types"));
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("verdict: FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("gain 1/3"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("run full"), std::string::npos) << r.out;
}

TEST(Cli, PreconditionFailuresExitTwo) {
  EXPECT_EQ(persuade("construct --which credible " + scenario("e3-two-types")).code, 2);
  EXPECT_EQ(persuade("construct --which full-disclosure " + scenario("e2-near-commitment")).code, 2);
  EXPECT_EQ(persuade("solve").code, 2);
  EXPECT_EQ(persuade("solve --scenario /nonexistent.json").code, 2);
  EXPECT_EQ(persuade("construct --which nonsense " + scenario("prosecutor")).code, 2);
}

TEST(Cli, TinyBudgetExitsThree) {
  auto r = persuade("verify --budget 10 " + scenario("e1-geometric"));
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_NE(r.out.find("budget"), std::string::npos);
}

TEST(Cli, ProfileRoundTripThroughFiles) {
  auto dir = scratch("roundtrip");
  auto built = persuade("construct --out " + dir.string() + " " + scenario("prosecutor"));
  ASSERT_EQ(built.code, 0) << built.out;
  auto profile = dir / "profile.json";
  ASSERT_TRUE(std::filesystem::exists(profile));
  auto r = persuade("verify --profile " + profile.string() + " " + scenario("prosecutor"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("ex-ante payoff: 3/5"), std::string::npos) << r.out;
  std::filesystem::remove_all(dir);
}

TEST(Cli, ClassifyWritesCsv) {
  auto dir = scratch("classify");
  auto r = persuade("classify --grid 6 --out " + dir.string() + " " + scenario("e1-geometric"));
  ASSERT_EQ(r.code, 0) << r.out;
  auto csv = slurp(dir / "classify.csv");
  EXPECT_EQ(csv.rfind("belief,", 0), 0u);
  EXPECT_NE(csv.find("\n1/3,"), std::string::npos);
  EXPECT_NE(csv.find("\n2/3,"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Cli, BoundsReportsThresholds) {
  auto r = persuade("bounds " + scenario("e3-two-types"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("type-count threshold n: 37"), std::string::npos) << r.out;
  auto g = persuade("bounds --grid 100 " + scenario("e1-geometric"));
  EXPECT_EQ(g.code, 0) << g.out;
  EXPECT_NE(g.out.find("type count 397"), std::string::npos) << g.out;
}

TEST(Cli, SimulateIsDeterministicForASeed) {
  std::string args = "simulate --seed 11 --samples 2000 " + scenario("e1-geometric");
  auto a = persuade(args), b = persuade(args);
  EXPECT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(a.out, b.out);
  auto c = persuade("simulate --seed 12 --samples 2000 " + scenario("e1-geometric"));
  EXPECT_NE(a.out, c.out);
}
