#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ensf_da/error.hpp"
#include "ensf_da/forward_models.hpp"
#include "ensf_da/geojson.hpp"

namespace ensf_da {
namespace {

namespace fs = std::filesystem;
using Kind = ExternalModelError::Kind;

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

fs::path make_call_dir(const fs::path& parent, std::size_t step_index) {
  static std::atomic<std::uint64_t> counter{0};
  fs::create_directories(parent);
  for (;;) {
    const fs::path dir = parent / ("call-" + std::to_string(step_index) + "-" + std::to_string(::getpid()) +
                                   "-" + std::to_string(counter.fetch_add(1)));
    if (fs::create_directory(dir)) return dir;
  }
}

std::string expand(std::string text, const std::string& key, const std::string& value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size()))
    text.replace(pos, key.size(), value);
  return text;
}

struct ExitStatus {
  bool timed_out = false;
  int code = 0;
  std::string signal;
};

/// Runs `command` through /bin/sh in its own process group with stdout and
/// stderr captured to files in `dir`. On timeout the whole group is killed
/// and reaped.
ExitStatus run_in_group(const std::string& command, const fs::path& dir, std::chrono::milliseconds timeout) {
  const std::string dir_s = dir.string();
  const std::string out_s = (dir / "stdout.log").string();
  const std::string err_s = (dir / "stderr.log").string();

  const pid_t pid = ::fork();
  if (pid < 0) throw ExternalModelError(Kind::launch_failed, dir, std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    if (::chdir(dir_s.c_str()) != 0) ::_exit(127);
    const int out_fd = ::open(out_s.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int err_fd = ::open(err_s.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (out_fd >= 0) ::dup2(out_fd, STDOUT_FILENO);
    if (err_fd >= 0) ::dup2(err_fd, STDERR_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  // Also set from the parent so kill(-pid) works even if the child has not
  // run setpgid yet.
  ::setpgid(pid, pid);

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  int status = 0;
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) throw ExternalModelError(Kind::launch_failed, dir, std::strerror(errno));
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGTERM);
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      ::kill(-pid, SIGKILL);
      while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
      }
      return {true, -1, {}};
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  // Reap stragglers the command left running in its group.
  ::kill(-pid, SIGKILL);

  if (WIFEXITED(status)) return {false, WEXITSTATUS(status), {}};
  if (WIFSIGNALED(status)) return {false, -1, ::strsignal(WTERMSIG(status))};
  return {false, -1, "unknown status"};
}

}  // namespace

Perimeter external_model_step(const Perimeter& p, const ExternalModelConfig& cfg, std::size_t step_index,
                              std::uint64_t rng_seed) {
  if (cfg.launch.empty()) throw std::invalid_argument("external model launch command is empty");
  if (cfg.timeout.count() <= 0) throw std::invalid_argument("external model timeout must be positive");

  const fs::path dir = make_call_dir(cfg.workdir, step_index);
  const fs::path input = dir / "input.geojson";
  const fs::path output = dir / "output.geojson";
  const fs::path params = dir / "params.txt";

  geojson::write_file(input, p);
  {
    std::ofstream out(params);
    out << "step_index=" << step_index << '\n'
        << "delta_days=" << shortest(cfg.delta_days) << '\n'
        << "rng_seed=" << rng_seed << '\n';
    if (!out) throw ExternalModelError(Kind::launch_failed, dir, "cannot write params.txt");
  }

  std::string command = cfg.launch;
  command = expand(command, "{dir}", dir.string());
  command = expand(command, "{input}", input.string());
  command = expand(command, "{output}", output.string());
  command = expand(command, "{params}", params.string());

  const ExitStatus status = run_in_group(command, dir, cfg.timeout);
  if (status.timed_out)
    throw ExternalModelError(Kind::timeout, dir, "no exit after " + std::to_string(cfg.timeout.count()) + " ms");
  if (!status.signal.empty()) throw ExternalModelError(Kind::nonzero_exit, dir, "killed by " + status.signal);
  if (status.code != 0) throw ExternalModelError(Kind::nonzero_exit, dir, "exit code " + std::to_string(status.code));
  if (!fs::exists(output)) throw ExternalModelError(Kind::missing_output, dir, output.string());

  Perimeter result = [&] {
    try {
      return geojson::read_file(output);
    } catch (const std::invalid_argument& e) {
      throw ExternalModelError(Kind::parse_error, dir, e.what());
    }
  }();

  std::error_code ec;
  fs::remove_all(dir, ec);
  return result;
}

ExternalFireModel::ExternalFireModel(ExternalModelConfig cfg, unsigned max_processes)
    : cfg_(std::move(cfg)),
      max_processes_(std::max(1u, max_processes)),
      slots_(std::make_unique<std::counting_semaphore<>>(static_cast<std::ptrdiff_t>(max_processes_))) {}

Eigen::VectorXd ExternalFireModel::step(const Eigen::VectorXd& state, std::size_t k, Engine& rng) const {
  const std::uint64_t seed = rng();
  const Perimeter p = [&] {
    try {
      return unflatten(state);
    } catch (const std::invalid_argument& e) {
      throw ModelError(std::string("external model input: ") + e.what());
    }
  }();
  slots_->acquire();
  try {
    Perimeter next = external_model_step(p, cfg_, k, seed);
    slots_->release();
    return flatten(next);
  } catch (...) {
    slots_->release();
    throw;
  }
}

ModelDescriptor ExternalFireModel::descriptor() const {
  return {"external",
          {{"launch", cfg_.launch},
           {"workdir", cfg_.workdir.string()},
           {"timeout_ms", std::to_string(cfg_.timeout.count())},
           {"delta_days", shortest(cfg_.delta_days)},
           {"max_processes", std::to_string(max_processes_)}}};
}

}  // namespace ensf_da
