#include "ensf_da/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ensf_da/geojson.hpp"
#include "ensf_da/random.hpp"

namespace ensf_da {

Scenario make_example1(const Example1Params& params, std::size_t ensemble_size, std::size_t steps,
                       std::uint64_t truth_seed, std::uint64_t filter_seed) {
  if (params.dim < 2 || params.dim % 2 != 0) throw std::invalid_argument("example1 dim must be even and >= 2");
  if (!(params.sigma_obs > 0.0)) throw std::invalid_argument("example1 sigma_obs must be positive");
  const auto d = static_cast<Eigen::Index>(params.dim);
  const double drift_scale = params.drift;

  Scenario s;
  s.name = "example1";
  s.kind = StateKind::vector;
  s.model = std::make_shared<SdeModel>(
      "linear", [drift_scale](const Eigen::VectorXd& x) -> Eigen::VectorXd { return drift_scale * x; },
      SdePredictConfig{params.delta_k, params.sigma_sde});

  Engine init = substream(truth_seed, StreamTag::truth, {0});
  Eigen::VectorXd truth = standard_normal_vector(d, init);

  for (std::size_t i = 0; i < ensemble_size; ++i) {
    Engine rng = substream(filter_seed, StreamTag::initial, {i});
    s.initial_members.push_back(truth + standard_normal_vector(d, rng));
  }

  for (std::size_t k = 1; k <= steps; ++k) {
    Engine rng = substream(truth_seed, StreamTag::truth, {k});
    truth = s.model->step(truth, k, rng);
    Engine obs_rng = substream(truth_seed, StreamTag::observation, {k});
    Eigen::VectorXd y = params.c * truth + params.sigma_obs * standard_normal_vector(d, obs_rng);
    s.steps.push_back({std::move(y), truth});
  }
  return s;
}

Perimeter regular_polygon(double center_lon, double center_lat, double radius, std::size_t vertices) {
  std::vector<Vertex> v;
  v.reserve(vertices);
  for (std::size_t i = 0; i < vertices; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(vertices);
    v.push_back({center_lon + radius * std::cos(angle), center_lat + radius * std::sin(angle)});
  }
  return Perimeter(std::move(v));
}

namespace {

Eigen::VectorXd perturb(const Eigen::VectorXd& x, double sigma, Engine& rng) {
  if (sigma <= 0.0) return x;
  return x + sigma * standard_normal_vector(x.size(), rng);
}

}  // namespace

Scenario make_synthetic_fire(const SyntheticFireScenarioParams& params, std::size_t ensemble_size,
                             std::size_t steps, std::uint64_t truth_seed, std::uint64_t filter_seed) {
  if (params.vertices < 3) throw std::invalid_argument("synthetic fire needs at least 3 vertices");
  if (!(params.sigma_obs > 0.0)) throw std::invalid_argument("synthetic fire sigma_obs must be positive");
  const Perimeter initial = regular_polygon(params.center_lon, params.center_lat, params.radius, params.vertices);

  std::shared_ptr<const ForwardModel> fire =
      std::make_shared<SyntheticFireModel>(SyntheticFireModel::for_initial(initial, params.growth, params.jitter));
  if (params.sigma_sde > 0.0)
    fire = std::make_shared<AdditiveNoiseModel>(fire, SdePredictConfig{params.delta_k, params.sigma_sde});

  Scenario s;
  s.name = "synthetic-fire";
  s.kind = StateKind::perimeter;
  s.model = fire;

  const Eigen::VectorXd x0 = flatten(initial);
  for (std::size_t i = 0; i < ensemble_size; ++i) {
    Engine rng = substream(filter_seed, StreamTag::initial, {i});
    s.initial_members.push_back(perturb(x0, params.initial_spread, rng));
  }

  Eigen::VectorXd truth = x0;
  for (std::size_t k = 1; k <= steps; ++k) {
    Engine rng = substream(truth_seed, StreamTag::truth, {k});
    truth = fire->step(truth, k, rng);
    Perimeter observed = unflatten(truth);
    if (params.obs_vertices >= 3) observed = resample(observed, params.obs_vertices);
    Engine obs_rng = substream(truth_seed, StreamTag::observation, {k});
    s.steps.push_back({perturb(flatten(observed), params.sigma_obs, obs_rng), truth});
  }
  return s;
}

Scenario make_external(const ExternalScenarioParams& params, std::size_t ensemble_size, std::size_t steps,
                       std::uint64_t filter_seed) {
  namespace fs = std::filesystem;
  const Perimeter initial = geojson::read_file(params.initial);

  std::vector<fs::path> files;
  if (!fs::is_directory(params.observations))
    throw std::invalid_argument("observation directory not found: " + params.observations.string());
  for (const auto& entry : fs::directory_iterator(params.observations))
    if (entry.is_regular_file() && entry.path().extension() == ".geojson") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.size() < steps)
    throw std::invalid_argument("observation directory has " + std::to_string(files.size()) +
                                " GeoJSON files, " + std::to_string(steps) + " steps requested");

  Scenario s;
  s.name = "external";
  s.kind = StateKind::perimeter;
  s.model = std::make_shared<ExternalFireModel>(params.model, params.max_processes);
  const Eigen::VectorXd x0 = flatten(initial);
  for (std::size_t i = 0; i < ensemble_size; ++i) {
    Engine rng = substream(filter_seed, StreamTag::initial, {i});
    s.initial_members.push_back(perturb(x0, params.initial_spread, rng));
  }
  for (std::size_t k = 0; k < steps; ++k) s.steps.push_back({flatten(geojson::read_file(files[k])), std::nullopt});
  return s;
}

}  // namespace ensf_da
