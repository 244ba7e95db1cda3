// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string output;
};

Result run_cli(const std::string& args) {
  const std::string test = ::testing::UnitTest::GetInstance()->current_test_info()->name();
  const fs::path log = fs::temp_directory_path() / ("stormdist_cli_" + test + ".log");
  const std::string cmd = std::string(STORMDIST_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream os;
  os << in.rdbuf();
  r.output = os.str();
  return r;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

TEST(Cli, MinimalRunWritesHundredRows) {
  const auto cfg = write_config("stormdist_cli_min.json", R"({
    "problem": {"family": "het_quadratic", "d": 2, "k": 1},
    "algo": "dstorm", "T": 100})");
  const fs::path out = fs::temp_directory_path() / "stormdist_cli_out";
  fs::remove_all(out);
  const auto r = run_cli("run --config " + cfg.string() + " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.output;
  std::ifstream in(out / "dstorm_K1_T100_s0.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 101u);
  fs::remove_all(out);
}

TEST(Cli, UnknownKeyExitsTwo) {
  const auto cfg = write_config("stormdist_cli_typo.json", R"({
    "problem": {"family": "het_quadratic", "d": 2, "k": 1},
    "algo": "dstorm", "T": 10, "schedule": {"moementum": 0.9}})");
  const auto r = run_cli("run --config " + cfg.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("moementum"), std::string::npos) << r.output;
}

TEST(Cli, LowBExitsThree) {
  const auto cfg = write_config("stormdist_cli_lowb.json", R"({
    "problem": {"family": "het_quadratic", "d": 2, "k": 1},
    "algo": "dstorm", "T": 10, "schedule": {"b": 0.2}})");
  const auto r = run_cli("run --config " + cfg.string() + " --out " +
                         (fs::temp_directory_path() / "stormdist_cli_lowb").string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.output.find("b^3 >= 2^{2/3}/84"), std::string::npos) << r.output;
}

TEST(Cli, CheckGradAndEstimate) {
  const std::string problem =
      R"('{"family": "sigmoid_quadratic", "d": 4, "k": 2, "lambda": 1.0}')";
  auto r = run_cli("check-grad --problem " + problem + " --points 20");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("worst_fd_rel_error"), std::string::npos);
  r = run_cli("estimate --problem " + problem + " --samples 200 --points 3");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("sigma_sq"), std::string::npos);
}

TEST(Cli, SweepOverridesWorkersAndSeeds) {
  const auto cfg = write_config("stormdist_cli_sweep.json", R"({
    "problem": {"family": "het_quadratic", "d": 2, "k": 1},
    "algo": "dstorm", "T": 20})");
  const fs::path out = fs::temp_directory_path() / "stormdist_cli_sweep";
  fs::remove_all(out);
  const auto r =
      run_cli("sweep --config " + cfg.string() + " --k 1,4 --seeds 2 --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(out / "dstorm_K4_T20_s1.csv"));
  EXPECT_TRUE(fs::exists(out / "speedup_dstorm_T20.csv"));
  fs::remove_all(out);
}

}  // namespace
