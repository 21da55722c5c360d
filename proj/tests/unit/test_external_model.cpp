#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>

#include <gtest/gtest.h>

#include "ensf_da/error.hpp"
#include "ensf_da/forward_models.hpp"
#include "ensf_da/geojson.hpp"

using namespace ensf_da;
namespace fs = std::filesystem;
using namespace std::chrono_literals;
using Kind = ExternalModelError::Kind;

namespace {

std::string stub(const std::string& name) { return "sh " + (fs::path(ENSF_DA_STUB_DIR) / name).string(); }

// Alive means present in /proc and not a zombie awaiting its reaper.
bool process_alive(long pid) {
  std::ifstream stat("/proc/" + std::to_string(pid) + "/stat");
  if (!stat) return false;
  std::string line;
  std::getline(stat, line);
  const auto close = line.rfind(')');
  return close != std::string::npos && close + 2 < line.size() && line[close + 2] != 'Z';
}

class ExternalModelTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / ("ensf_da_ext_" + std::string(info->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  ExternalModelConfig config(const std::string& script, std::chrono::milliseconds timeout = 10s) const {
    return {root_, stub(script), timeout, 0.5};
  }

  std::size_t call_dirs() const {
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(root_)) ++n;
    return n;
  }

  Kind failure_kind(const ExternalModelConfig& cfg) {
    try {
      (void)external_model_step(square_, cfg, 1, 7);
    } catch (const ExternalModelError& e) {
      EXPECT_TRUE(fs::is_directory(e.workdir()));
      EXPECT_TRUE(fs::exists(e.workdir() / "input.geojson"));
      return e.kind();
    }
    ADD_FAILURE() << "expected ExternalModelError";
    return Kind::launch_failed;
  }

  fs::path root_;
  Perimeter square_{{{-120.0, 38.0}, {-119.5, 38.0}, {-119.5, 38.5}, {-120.0, 38.5}}};
};

}  // namespace

TEST_F(ExternalModelTest, EchoRoundTripReturnsInputAndCleansUp) {
  EXPECT_EQ(external_model_step(square_, config("echo.sh"), 3, 11), square_);
  EXPECT_EQ(call_dirs(), 0u);
}

TEST_F(ExternalModelTest, WritesParamsFile) {
  ExternalModelConfig cfg = config("echo.sh");
  cfg.launch = "cp params.txt {dir}/../params.copy && " + stub("echo.sh");
  (void)external_model_step(square_, cfg, 4, 123);
  std::ifstream in(root_ / "params.copy");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text, "step_index=4\ndelta_days=0.5\nrng_seed=123\n");
}

TEST_F(ExternalModelTest, MalformedOutputIsParseError) {
  EXPECT_EQ(failure_kind(config("malformed.sh")), Kind::parse_error);
  EXPECT_EQ(call_dirs(), 1u);
}

TEST_F(ExternalModelTest, NonzeroExitKeepsLogs) {
  try {
    (void)external_model_step(square_, config("fail.sh"), 1, 1);
    FAIL() << "expected ExternalModelError";
  } catch (const ExternalModelError& e) {
    EXPECT_EQ(e.kind(), Kind::nonzero_exit);
    std::ifstream err(e.workdir() / "stderr.log");
    std::string line;
    std::getline(err, line);
    EXPECT_EQ(line, "simulated crash");
  }
}

TEST_F(ExternalModelTest, MissingOutput) { EXPECT_EQ(failure_kind(config("silent.sh")), Kind::missing_output); }

TEST_F(ExternalModelTest, LaunchFailureIsNonzeroExit) {
  ExternalModelConfig cfg = config("echo.sh");
  cfg.launch = "/nonexistent/simulator";
  EXPECT_EQ(failure_kind(cfg), Kind::nonzero_exit);
}

TEST_F(ExternalModelTest, TimeoutKillsWholeProcessGroup) {
  const auto start = std::chrono::steady_clock::now();
  fs::path dir;
  try {
    (void)external_model_step(square_, config("sleep.sh", 500ms), 1, 1);
    FAIL() << "expected timeout";
  } catch (const ExternalModelError& e) {
    EXPECT_EQ(e.kind(), Kind::timeout);
    dir = e.workdir();
  }
  EXPECT_LT(std::chrono::steady_clock::now() - start, 10s);
  std::ifstream pid_file(dir / "child.pid");
  long pid = 0;
  ASSERT_TRUE(pid_file >> pid);
  for (int i = 0; i < 50 && process_alive(pid); ++i) std::this_thread::sleep_for(20ms);
  EXPECT_FALSE(process_alive(pid));
}

TEST_F(ExternalModelTest, ForwardModelAdapterPropagatesErrorsAsModelError) {
  const ExternalFireModel echo(config("echo.sh"), 2);
  Engine rng(1);
  EXPECT_EQ(echo.step(flatten(square_), 1, rng), flatten(square_));
  EXPECT_EQ(echo.descriptor().name, "external");

  const ExternalFireModel broken(config("fail.sh"), 2);
  EXPECT_THROW(broken.step(flatten(square_), 1, rng), ModelError);
}

TEST_F(ExternalModelTest, ConcurrentCallsUseSeparateDirectories) {
  const ExternalFireModel model(config("grow.sh"), 3);
  std::vector<std::thread> workers;
  std::vector<Eigen::VectorXd> results(6);
  for (std::size_t i = 0; i < results.size(); ++i)
    workers.emplace_back([&, i] {
      Engine rng(i);
      results[i] = model.step(flatten(square_), 2, rng);
    });
  for (auto& w : workers) w.join();
  for (const auto& r : results) {
    ASSERT_EQ(r.size(), 8);
    EXPECT_NEAR(r[2], -120.0 + 1.01 * 0.5, 1e-12);
  }
  EXPECT_EQ(call_dirs(), 0u);
}
