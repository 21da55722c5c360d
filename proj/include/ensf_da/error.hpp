#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace ensf_da {

/// Base for all runtime failures raised by the toolkit. Precondition
/// violations on arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A reverse-diffusion or Kalman analysis produced a non-finite state or
/// could not factor its innovation system.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::ptrdiff_t member, double tau)
      : Error(what), member_(member), tau_(tau) {}

  /// Offending ensemble member, or -1 when not member-specific.
  std::ptrdiff_t member() const noexcept { return member_; }
  double tau() const noexcept { return tau_; }

 private:
  std::ptrdiff_t member_;
  double tau_;
};

/// A forward model could not propagate a state.
class ModelError : public Error {
 public:
  using Error::Error;
};

class ExternalModelError : public ModelError {
 public:
  enum class Kind { launch_failed, nonzero_exit, timeout, missing_output, parse_error };

  ExternalModelError(Kind kind, std::filesystem::path workdir, const std::string& detail)
      : ModelError(describe(kind) + " (" + workdir.string() + "): " + detail),
        kind_(kind),
        workdir_(std::move(workdir)) {}

  Kind kind() const noexcept { return kind_; }
  /// Per-call directory, preserved on disk for diagnosis.
  const std::filesystem::path& workdir() const noexcept { return workdir_; }

  static std::string describe(Kind kind) {
    switch (kind) {
      case Kind::launch_failed: return "external model could not be launched";
      case Kind::nonzero_exit: return "external model exited with nonzero status";
      case Kind::timeout: return "external model timed out";
      case Kind::missing_output: return "external model produced no output.geojson";
      case Kind::parse_error: return "external model output could not be parsed";
    }
    return "external model failure";
  }

 private:
  Kind kind_;
  std::filesystem::path workdir_;
};

/// Failure inside one assimilation step, annotated with the step index.
class StepError : public Error {
 public:
  StepError(std::size_t step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace ensf_da
