#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ensf_da/ensemble.hpp"
#include "ensf_da/forward_models.hpp"
#include "ensf_da/geometry.hpp"
#include "ensf_da/score_filter.hpp"

namespace ensf_da {

enum class Method { ensf, enkf, none };

/// Fixed-dimension state vectors, or flattened perimeters whose vertex
/// counts change and need harmonizing before each analysis.
enum class StateKind { vector, perimeter };

std::string to_string(Method m);
Method parse_method(const std::string& text);

struct AssimilationConfig {
  Method method = Method::ensf;
  StateKind state_kind = StateKind::vector;
  std::size_t ensemble_size = 100;
  std::size_t steps = 30;
  /// Schedule and reverse step count; the seed and thread count here are
  /// ignored in favour of rng_seed and threads below.
  EnsfConfig ensf;
  ObservationModel obs = ObservationModel::scaled_identity(1.0, 1.0);
  std::uint64_t rng_seed = 0;
  unsigned threads = 1;
  /// Drop members whose forward model fails instead of aborting the step.
  bool drop_failed_members = true;

  void validate() const;
};

struct StepRecord {
  std::size_t step = 0;
  std::optional<double> rmse_vs_truth;
  double rmse_vs_obs = 0.0;
  /// State dimension after harmonization (2 n* for perimeters).
  std::size_t harmonized_dim = 0;
  double wall_time_predict = 0.0;
  double wall_time_update = 0.0;
  std::size_t members = 0;
};

/// Ensemble and observation resampled to a common vertex count and put in
/// canonical order.
struct Harmonized {
  Ensemble ensemble;
  Eigen::VectorXd observation;
  std::size_t vertex_count;
  /// Reference point used for the start-vertex angle.
  Vertex origin;
};

/// Resamples every predicted perimeter and the observation to the largest
/// vertex count among them, then normalizes each about the mean of the
/// predicted centroids. Invalid inputs throw std::invalid_argument naming
/// the member index.
Harmonized harmonize(const std::vector<Perimeter>& predicted, const Perimeter& observed);

/// Brings a perimeter (e.g. the truth) onto an existing harmonized grid.
Eigen::VectorXd harmonize_like(const Perimeter& p, std::size_t vertex_count, const Vertex& origin);

struct StepInput {
  Eigen::VectorXd observation;
  std::optional<Eigen::VectorXd> truth;
};

struct StepResult {
  std::vector<Eigen::VectorXd> members;
  Eigen::VectorXd estimate;
  /// Observation vector the analysis used (harmonized for perimeters).
  Eigen::VectorXd observation;
  StepRecord record;
};

/// predict -> (harmonize) -> analysis -> record, for filtering step k.
/// Failures are rethrown as StepError carrying k.
StepResult assimilate_step(const std::vector<Eigen::VectorXd>& state, const StepInput& input,
                           const ForwardModel& model, const AssimilationConfig& cfg, std::size_t k);

/// Perimeter-typed convenience wrapper around assimilate_step.
std::pair<std::vector<Perimeter>, StepRecord> assimilate_step(const std::vector<Perimeter>& state,
                                                              const Perimeter& observation,
                                                              const std::optional<Perimeter>& truth,
                                                              const ForwardModel& model,
                                                              const AssimilationConfig& cfg, std::size_t k);

/// Initial ensemble, forward model, and per-step observations/truth.
struct Scenario {
  std::string name;
  StateKind kind = StateKind::vector;
  std::shared_ptr<const ForwardModel> model;
  std::vector<Eigen::VectorXd> initial_members;
  std::vector<StepInput> steps;
};

struct ExperimentResult {
  std::vector<StepRecord> records;
  std::vector<Eigen::VectorXd> final_members;
  /// Set when a step failed; records hold the completed steps.
  std::optional<std::string> error;
  std::optional<std::size_t> failed_step;

  double mean_rmse_truth() const;
  double mean_rmse_obs() const;
};

using StepObserver = std::function<void(const StepResult&)>;

/// Runs cfg.steps assimilation steps. Deterministic for fixed seeds and
/// independent of cfg.threads.
ExperimentResult run_experiment(const AssimilationConfig& cfg, const Scenario& scenario,
                                const StepObserver& observer = {});

/// Column order: step, rmse_truth_km, rmse_obs_km, dim, t_predict_s, t_update_s.
void write_records_csv(std::ostream& out, const std::vector<StepRecord>& records);
inline constexpr const char* kRecordsCsvHeader = "step,rmse_truth_km,rmse_obs_km,dim,t_predict_s,t_update_s";

}  // namespace ensf_da
