#include "ensf_da/assimilation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "ensf_da/enkf.hpp"
#include "ensf_da/error.hpp"
#include "ensf_da/parallel.hpp"
#include "ensf_da/random.hpp"

namespace ensf_da {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// RMSE between the estimate mapped to observation space and y, or NaN if
/// the observation space cannot be read as coordinate pairs.
double obs_space_rmse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& y, const ObservationModel& obs) {
  if (y.size() < 2 || y.size() % 2 != 0) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::VectorXd predicted = obs.apply(estimate);
  return rmse_haversine_flat(predicted, y);
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::ensf: return "ensf";
    case Method::enkf: return "enkf";
    case Method::none: return "none";
  }
  return "unknown";
}

Method parse_method(const std::string& text) {
  if (text == "ensf") return Method::ensf;
  if (text == "enkf") return Method::enkf;
  if (text == "none") return Method::none;
  throw std::invalid_argument("unknown method '" + text + "' (expected ensf, enkf or none)");
}

void AssimilationConfig::validate() const {
  if (ensemble_size < 2) throw std::invalid_argument("ensemble_size must be at least 2");
  if (steps < 1) throw std::invalid_argument("steps must be at least 1");
  if (ensf.n_reverse_steps < 1) throw std::invalid_argument("n_reverse_steps must be at least 1");
}

Harmonized harmonize(const std::vector<Perimeter>& predicted, const Perimeter& observed) {
  if (predicted.size() < 2) throw std::invalid_argument("harmonize needs at least 2 predicted perimeters");

  std::size_t target = observed.size();
  for (const Perimeter& p : predicted) target = std::max(target, p.size());

  Vertex origin{0.0, 0.0};
  for (const Perimeter& p : predicted) {
    const Vertex c = p.centroid();
    origin.lon += c.lon;
    origin.lat += c.lat;
  }
  origin.lon /= static_cast<double>(predicted.size());
  origin.lat /= static_cast<double>(predicted.size());

  Eigen::MatrixXd members(2 * static_cast<Eigen::Index>(target), static_cast<Eigen::Index>(predicted.size()));
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    try {
      members.col(static_cast<Eigen::Index>(i)) = harmonize_like(predicted[i], target, origin);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("member " + std::to_string(i) + ": " + e.what());
    }
  }
  Eigen::VectorXd y;
  try {
    y = harmonize_like(observed, target, origin);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("observation: ") + e.what());
  }
  return {Ensemble(std::move(members)), std::move(y), target, origin};
}

Eigen::VectorXd harmonize_like(const Perimeter& p, std::size_t vertex_count, const Vertex& origin) {
  return flatten(normalize_about(resample(p, vertex_count), origin));
}

StepResult assimilate_step(const std::vector<Eigen::VectorXd>& state, const StepInput& input,
                           const ForwardModel& model, const AssimilationConfig& cfg, std::size_t k) {
  try {
    if (state.size() < 2) throw std::invalid_argument("ensemble has fewer than 2 members");

    // Predict.
    const auto t0 = Clock::now();
    std::vector<std::optional<Eigen::VectorXd>> predicted(state.size());
    std::vector<std::string> failures(state.size());
    parallel_for(state.size(), cfg.threads, [&](std::size_t i) {
      Engine rng = substream(cfg.rng_seed, StreamTag::predict, {k, i});
      try {
        Eigen::VectorXd next = model.step(state[i], k, rng);
        if (!next.allFinite()) throw ModelError("non-finite prediction");
        predicted[i] = std::move(next);
      } catch (const ModelError& e) {
        if (!cfg.drop_failed_members) throw ModelError("member " + std::to_string(i) + ": " + e.what());
        failures[i] = e.what();
      }
    });
    std::vector<Eigen::VectorXd> survivors;
    for (auto& p : predicted)
      if (p) survivors.push_back(std::move(*p));
    if (survivors.size() < 2)
      throw ModelError("only " + std::to_string(survivors.size()) + " ensemble members survived prediction");
    const double t_predict = seconds_since(t0);

    // Bring states and observation onto a shared coordinate vector.
    const auto t1 = Clock::now();
    Eigen::VectorXd y;
    std::optional<Eigen::VectorXd> truth;
    std::optional<Ensemble> prior;
    if (cfg.state_kind == StateKind::vector) {
      const Eigen::Index d = survivors.front().size();
      Eigen::MatrixXd m(d, static_cast<Eigen::Index>(survivors.size()));
      for (std::size_t i = 0; i < survivors.size(); ++i) {
        if (survivors[i].size() != d)
          throw std::invalid_argument("member " + std::to_string(i) + " changed dimension in a vector-state model");
        m.col(static_cast<Eigen::Index>(i)) = survivors[i];
      }
      prior.emplace(std::move(m));
      y = input.observation;
      truth = input.truth;
    } else {
      std::vector<Perimeter> perimeters;
      perimeters.reserve(survivors.size());
      for (std::size_t i = 0; i < survivors.size(); ++i) {
        try {
          perimeters.push_back(unflatten(survivors[i]));
        } catch (const std::invalid_argument& e) {
          throw std::invalid_argument("member " + std::to_string(i) + ": " + e.what());
        }
      }
      Harmonized h = harmonize(perimeters, unflatten(input.observation));
      if (input.truth) truth = harmonize_like(unflatten(*input.truth), h.vertex_count, h.origin);
      y = std::move(h.observation);
      prior.emplace(std::move(h.ensemble));
    }

    // Analysis.
    Ensemble posterior = [&] {
      switch (cfg.method) {
        case Method::ensf: {
          EnsfConfig ecfg = cfg.ensf;
          ecfg.rng_seed = derive_seed(cfg.rng_seed, StreamTag::ensf, {k});
          ecfg.threads = cfg.threads;
          return ensf_update(*prior, y, cfg.obs, ecfg);
        }
        case Method::enkf:
          return enkf_update(*prior, y, cfg.obs, derive_seed(cfg.rng_seed, StreamTag::enkf, {k}));
        case Method::none:
          break;
      }
      return *prior;
    }();
    const double t_update = seconds_since(t1);

    StepResult result;
    result.estimate = posterior.mean();
    result.members.reserve(static_cast<std::size_t>(posterior.size()));
    for (Eigen::Index i = 0; i < posterior.size(); ++i) result.members.emplace_back(posterior.member(i));

    StepRecord& rec = result.record;
    rec.step = k;
    rec.harmonized_dim = static_cast<std::size_t>(posterior.dim());
    rec.rmse_vs_obs = obs_space_rmse(result.estimate, y, cfg.obs);
    if (truth) rec.rmse_vs_truth = rmse_haversine_flat(result.estimate, *truth);
    result.observation = std::move(y);
    rec.wall_time_predict = t_predict;
    rec.wall_time_update = t_update;
    rec.members = result.members.size();
    return result;
  } catch (const StepError&) {
    throw;
  } catch (const std::exception& e) {
    throw StepError(k, e.what());
  }
}

std::pair<std::vector<Perimeter>, StepRecord> assimilate_step(const std::vector<Perimeter>& state,
                                                              const Perimeter& observation,
                                                              const std::optional<Perimeter>& truth,
                                                              const ForwardModel& model,
                                                              const AssimilationConfig& cfg, std::size_t k) {
  AssimilationConfig pcfg = cfg;
  pcfg.state_kind = StateKind::perimeter;
  std::vector<Eigen::VectorXd> flat;
  flat.reserve(state.size());
  for (const Perimeter& p : state) flat.push_back(flatten(p));
  StepInput input{flatten(observation), std::nullopt};
  if (truth) input.truth = flatten(*truth);

  StepResult r = assimilate_step(flat, input, model, pcfg, k);
  std::vector<Perimeter> out;
  out.reserve(r.members.size());
  try {
    for (const auto& m : r.members) out.push_back(unflatten(m));
  } catch (const std::invalid_argument& e) {
    throw StepError(k, std::string("analysis produced an invalid perimeter: ") + e.what());
  }
  return {std::move(out), r.record};
}

double ExperimentResult::mean_rmse_truth() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.rmse_vs_truth) {
      sum += *r.rmse_vs_truth;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

double ExperimentResult::mean_rmse_obs() const {
  if (records.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& r : records) sum += r.rmse_vs_obs;
  return sum / static_cast<double>(records.size());
}

ExperimentResult run_experiment(const AssimilationConfig& cfg, const Scenario& scenario,
                                const StepObserver& observer) {
  cfg.validate();
  if (!scenario.model) throw std::invalid_argument("scenario has no forward model");
  if (scenario.steps.size() < cfg.steps)
    throw std::invalid_argument("scenario provides " + std::to_string(scenario.steps.size()) +
                                " observations but " + std::to_string(cfg.steps) + " steps were requested");
  if (scenario.initial_members.size() != cfg.ensemble_size)
    throw std::invalid_argument("scenario initial ensemble has " + std::to_string(scenario.initial_members.size()) +
                                " members, config asks for " + std::to_string(cfg.ensemble_size));

  AssimilationConfig step_cfg = cfg;
  step_cfg.state_kind = scenario.kind;

  ExperimentResult result;
  std::vector<Eigen::VectorXd> state = scenario.initial_members;
  for (std::size_t k = 1; k <= cfg.steps; ++k) {
    try {
      StepResult r = assimilate_step(state, scenario.steps[k - 1], *scenario.model, step_cfg, k);
      if (observer) observer(r);
      result.records.push_back(r.record);
      state = std::move(r.members);
    } catch (const std::exception& e) {
      result.error = e.what();
      result.failed_step = k;
      break;
    }
  }
  result.final_members = std::move(state);
  return result;
}

void write_records_csv(std::ostream& out, const std::vector<StepRecord>& records) {
  out << kRecordsCsvHeader << '\n';
  const auto old_precision = out.precision(10);
  for (const auto& r : records) {
    out << r.step << ',';
    if (r.rmse_vs_truth) out << *r.rmse_vs_truth;
    else out << "nan";
    out << ',' << r.rmse_vs_obs << ',' << r.harmonized_dim << ',' << r.wall_time_predict << ','
        << r.wall_time_update << '\n';
  }
  out.precision(old_precision);
}

}  // namespace ensf_da
