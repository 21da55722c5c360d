#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ensf_da/assimilation.hpp"
#include "ensf_da/forward_models.hpp"

namespace ensf_da {

/// Linear benchmark: drift F(x) = drift * x inside an Euler-Maruyama step,
/// observations y = c x + N(0, sigma_obs^2 I).
struct Example1Params {
  std::size_t dim = 2500;
  double delta_k = 0.05;
  double sigma_sde = 0.5;
  double drift = 2.0;
  double c = 0.25;
  double sigma_obs = 0.1;
};

/// Truth x_0 ~ N(0, I) and its trajectory come from `truth_seed`;
/// ensemble members start at x_0 + N(0, I) drawn from `filter_seed`.
Scenario make_example1(const Example1Params& params, std::size_t ensemble_size, std::size_t steps,
                       std::uint64_t truth_seed, std::uint64_t filter_seed);

struct SyntheticFireScenarioParams {
  double center_lon = -120.5;
  double center_lat = 38.5;
  /// Initial radius, degrees.
  double radius = 1.0;
  std::size_t vertices = 12;
  double growth = 0.05;
  double jitter = 0.5;
  /// Std of the per-coordinate perturbation of initial members, degrees.
  double initial_spread = 0.05;
  double sigma_obs = 0.1;
  /// Vertex count of observed perimeters; 0 keeps the truth's count.
  std::size_t obs_vertices = 0;
  /// Optional additive process noise on predicted vertices.
  double delta_k = 0.05;
  double sigma_sde = 0.0;
};

Perimeter regular_polygon(double center_lon, double center_lat, double radius, std::size_t vertices);

/// Growing synthetic fire. The truth evolves with the same model as the
/// ensemble from `truth_seed`; observations are the truth (optionally
/// resampled) plus N(0, sigma_obs^2) coordinate noise.
Scenario make_synthetic_fire(const SyntheticFireScenarioParams& params, std::size_t ensemble_size,
                             std::size_t steps, std::uint64_t truth_seed, std::uint64_t filter_seed);

struct ExternalScenarioParams {
  ExternalModelConfig model;
  unsigned max_processes = 4;
  std::filesystem::path initial;
  /// Directory of observation GeoJSON files, consumed in filename order.
  std::filesystem::path observations;
  double initial_spread = 0.0;
};

/// External simulator scenario without known truth.
Scenario make_external(const ExternalScenarioParams& params, std::size_t ensemble_size, std::size_t steps,
                       std::uint64_t filter_seed);

}  // namespace ensf_da
