#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <semaphore>
#include <string>

#include <Eigen/Core>

#include "ensf_da/ensemble.hpp"
#include "ensf_da/geometry.hpp"
#include "ensf_da/random.hpp"

namespace ensf_da {

struct ModelDescriptor {
  std::string name;
  /// Static parameters (theta), rendered as text.
  std::map<std::string, std::string> parameters;
};

/// One-step state propagator x_{k+1} = F(x_k; theta, lambda_k). States are
/// flat coordinate vectors; perimeter models read and write them as
/// (lon, lat) pairs and may change their length. Failures are reported by
/// throwing ModelError.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual Eigen::VectorXd step(const Eigen::VectorXd& state, std::size_t k, Engine& rng) const = 0;
  virtual ModelDescriptor descriptor() const = 0;
};

/// Drift of the linear benchmark system: F(x) = 2x.
Eigen::VectorXd linear_model_step(const Eigen::Ref<const Eigen::VectorXd>& x);

using Drift = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct SdePredictConfig {
  double delta_k = 0.05;
  double sigma_sde = 0.5;

  void validate() const;
};

/// Euler-Maruyama prediction x + F(x) dk + sqrt(dk) sigma w for every
/// member; member i draws w from substream i of `seed`.
Ensemble sde_predict(const Ensemble& prior, const Drift& drift, const SdePredictConfig& cfg,
                     std::uint64_t seed, unsigned threads = 1);

/// Euler-Maruyama step with a fixed drift, usable inside the assimilation loop.
class SdeModel : public ForwardModel {
 public:
  SdeModel(std::string name, Drift drift, SdePredictConfig cfg);

  Eigen::VectorXd step(const Eigen::VectorXd& state, std::size_t k, Engine& rng) const override;
  ModelDescriptor descriptor() const override;

 private:
  std::string name_;
  Drift drift_;
  SdePredictConfig cfg_;
};

/// Wraps a map-type model and adds sqrt(dk) sigma w to its output.
class AdditiveNoiseModel : public ForwardModel {
 public:
  AdditiveNoiseModel(std::shared_ptr<const ForwardModel> inner, SdePredictConfig cfg);

  Eigen::VectorXd step(const Eigen::VectorXd& state, std::size_t k, Engine& rng) const override;
  ModelDescriptor descriptor() const override;

 private:
  std::shared_ptr<const ForwardModel> inner_;
  SdePredictConfig cfg_;
};

struct SyntheticFireParams {
  /// Radial spread per step, degrees.
  double growth = 0.05;
  /// Relative spread jitter in [0, 1]; each vertex moves
  /// growth * (1 + jitter * U(-1, 1)).
  double jitter = 0.5;
  /// Edges longer than this get a midpoint vertex inserted.
  double split_threshold = 0.0;
};

/// Synthetic growing fire: pushes each vertex outward from the vertex
/// centroid, then splits every edge longer than the threshold once. The
/// vertex count never decreases.
Perimeter synthetic_perimeter_step(const Perimeter& p, const SyntheticFireParams& params, Engine& rng);

class SyntheticFireModel : public ForwardModel {
 public:
  explicit SyntheticFireModel(SyntheticFireParams params);

  /// Split threshold defaults to twice the mean edge length of `initial`.
  static SyntheticFireModel for_initial(const Perimeter& initial, double growth, double jitter);

  const SyntheticFireParams& params() const noexcept { return params_; }

  Eigen::VectorXd step(const Eigen::VectorXd& state, std::size_t k, Engine& rng) const override;
  ModelDescriptor descriptor() const override;

 private:
  SyntheticFireParams params_;
};

struct ExternalModelConfig {
  /// Parent of the per-call directories.
  std::filesystem::path workdir;
  /// Shell command run with the call directory as working directory.
  /// Placeholders: {dir} {input} {output} {params}.
  std::string launch;
  std::chrono::milliseconds timeout{60'000};
  double delta_days = 1.0;
};

/// Runs an external simulator through the file-exchange protocol: a fresh
/// directory under cfg.workdir receives input.geojson and params.txt
/// (step_index, delta_days, rng_seed); the command must write output.geojson
/// and exit 0. The directory is removed on success and kept on failure.
/// Throws ExternalModelError for each failure kind.
Perimeter external_model_step(const Perimeter& p, const ExternalModelConfig& cfg, std::size_t step_index,
                              std::uint64_t rng_seed);

/// external_model_step as a ForwardModel, limiting concurrent processes.
class ExternalFireModel : public ForwardModel {
 public:
  explicit ExternalFireModel(ExternalModelConfig cfg, unsigned max_processes = 4);

  Eigen::VectorXd step(const Eigen::VectorXd& state, std::size_t k, Engine& rng) const override;
  ModelDescriptor descriptor() const override;

 private:
  ExternalModelConfig cfg_;
  unsigned max_processes_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

}  // namespace ensf_da
