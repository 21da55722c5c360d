#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string output;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(ENSF_DA_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  char buf[4096];
  while (const std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("ensf_da_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& text, const std::string& name = "run.ini") const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  fs::path dir_;
};

const char* kSmall =
    "scenario = example1\nmethod = none\nensemble_size = 10\nsteps = 30\nseed = 1\n"
    "[example1]\ndim = 20\n[ensf]\nreverse_steps = 20\n";

}  // namespace

TEST_F(CliTest, RunWritesOneRowPerStep) {
  const auto cfg = write_config(kSmall);
  const Outcome o = run("run " + cfg.string() + " --out-dir " + (dir_ / "out").string());
  ASSERT_EQ(o.code, 0) << o.output;
  const std::string csv = read(dir_ / "out" / "records.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,rmse_truth_km,rmse_obs_km,dim,t_predict_s,t_update_s");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 31);
}

TEST_F(CliTest, NoTimingRerunsAreByteIdentical) {
  std::string text = kSmall;
  text.replace(text.find("method = none"), 13, "method = ensf");
  const auto cfg = write_config(text);
  ASSERT_EQ(run("run " + cfg.string() + " --no-timing --out-dir " + (dir_ / "a").string()).code, 0);
  ASSERT_EQ(run("run " + cfg.string() + " --no-timing --threads 3 --out-dir " + (dir_ / "b").string()).code, 0);
  EXPECT_EQ(read(dir_ / "a" / "records.csv"), read(dir_ / "b" / "records.csv"));
  ASSERT_EQ(run("run " + cfg.string() + " --no-timing --seed 2 --out-dir " + (dir_ / "c").string()).code, 0);
  EXPECT_NE(read(dir_ / "a" / "records.csv"), read(dir_ / "c" / "records.csv"));
}

TEST_F(CliTest, MissingFieldExitsWithConfigError) {
  const auto cfg = write_config("scenario = example1\nmethod = ensf\nsteps = 3\n");
  const Outcome o = run("run " + cfg.string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.output.find("run.ensemble_size"), std::string::npos) << o.output;
}

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate x.ini").code, 2);
  EXPECT_EQ(run("run " + (dir_ / "missing.ini").string()).code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(CliTest, ExternalModelFailureExitsWithThree) {
  std::ofstream(dir_ / "init.geojson")
      << R"({"type":"Polygon","coordinates":[[[-120,38],[-119.5,38],[-119.5,38.5],[-120,38.5],[-120,38]]]})";
  fs::create_directories(dir_ / "obs");
  fs::copy_file(dir_ / "init.geojson", dir_ / "obs" / "001.geojson");
  const auto cfg = write_config("scenario = external\nmethod = enkf\nensemble_size = 4\nsteps = 1\n"
                                "[external]\ncommand = sh " + std::string(ENSF_DA_STUB_DIR) + "/fail.sh\n"
                                "initial = init.geojson\nobservations = obs\ninitial_spread = 0.01\n");
  const Outcome o = run("run " + cfg.string() + " --out-dir " + (dir_ / "out").string());
  EXPECT_EQ(o.code, 3) << o.output;
}

TEST_F(CliTest, ExternalEchoRunSucceeds) {
  std::ofstream(dir_ / "init.geojson")
      << R"({"type":"Polygon","coordinates":[[[-120,38],[-119.5,38],[-119.5,38.5],[-120,38.5],[-120,38]]]})";
  fs::create_directories(dir_ / "obs");
  for (const char* name : {"001.geojson", "002.geojson"}) fs::copy_file(dir_ / "init.geojson", dir_ / "obs" / name);
  const auto cfg = write_config("scenario = external\nmethod = ensf\nensemble_size = 4\nsteps = 2\n"
                                "[external]\ncommand = sh " + std::string(ENSF_DA_STUB_DIR) + "/echo.sh\n"
                                "initial = init.geojson\nobservations = obs\ninitial_spread = 0.01\n");
  const Outcome o = run("run " + cfg.string() + " --out-dir " + (dir_ / "out").string());
  ASSERT_EQ(o.code, 0) << o.output;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "step_002.geojson"));
}

TEST_F(CliTest, SweepCoarseGridHas121Cells) {
  const auto cfg = write_config(
      "scenario = example1\nmethod = ensf\nensemble_size = 4\nsteps = 1\n[example1]\ndim = 4\n"
      "[ensf]\nreverse_steps = 5\n");
  const Outcome o = run("sweep " + cfg.string() + " --out-dir " + (dir_ / "sweep").string());
  ASSERT_EQ(o.code, 0) << o.output;
  const std::string csv = read(dir_ / "sweep" / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 122);
}

TEST_F(CliTest, BenchPrintsBothMethods) {
  const auto cfg = write_config(kSmall);
  const Outcome o = run("bench " + cfg.string() + " --trials 2 --out-dir " + (dir_ / "bench").string());
  ASSERT_EQ(o.code, 0) << o.output;
  EXPECT_NE(o.output.find("ensf,"), std::string::npos);
  EXPECT_NE(o.output.find("enkf,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "bench" / "bench.txt"));
  EXPECT_EQ(run("bench " + cfg.string() + " --trials 1").code, 2);
}
