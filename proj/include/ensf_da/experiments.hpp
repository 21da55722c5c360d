#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ensf_da/assimilation.hpp"
#include "ensf_da/config.hpp"

namespace ensf_da {

/// Runs the configured experiment and writes into cfg.out_dir:
///   records.csv           one row per completed step
///   step_XXX.geojson      ensemble mean and members (perimeter states)
///   summary.txt           mean RMSE and total wall time
/// Outputs of completed steps are kept when a step fails.
ExperimentResult run_to_directory(const RunConfig& cfg);

struct SweepRow {
  double eps_alpha;
  double eps_beta;
  double mean_rmse_truth;
  double mean_rmse_obs;
};

inline constexpr const char* kSweepCsvHeader = "eps_alpha,eps_beta,mean_rmse_truth,mean_rmse_obs";

/// One full run per (eps_alpha, eps_beta) cell. Every cell shares the
/// truth, observations, initial ensemble and filter seed, so rows are
/// paired and independent of evaluation order. Failed cells yield NaN.
/// Rows are sorted by (eps_alpha, eps_beta).
std::vector<SweepRow> run_sweep(const RunConfig& cfg, unsigned threads = 1);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct TimingStats {
  std::vector<double> samples;
  double mean = 0.0;
  double stddev = 0.0;

  static TimingStats from(std::vector<double> samples);
};

struct BenchReport {
  TimingStats ensf;
  TimingStats enkf;
  /// enkf.mean / ensf.mean: how many times faster EnSF's analysis is.
  double speedup = 0.0;
  Eigen::Index dim = 0;
  Eigen::Index members = 0;
  std::size_t reverse_steps = 0;
};

/// Times only the analysis step of each method on one shared prior
/// ensemble (first predicted step of the configured scenario).
BenchReport run_bench(const RunConfig& cfg, std::size_t trials);
void write_bench_report(std::ostream& out, const BenchReport& report);

}  // namespace ensf_da
