#include "ensf_da/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

#include "ensf_da/enkf.hpp"
#include "ensf_da/geojson.hpp"
#include "ensf_da/parallel.hpp"

namespace ensf_da {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string step_filename(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%03zu.geojson", k);
  return buf;
}

void write_step_geojson(const fs::path& path, const StepResult& r) {
  std::vector<Perimeter> perimeters;
  perimeters.push_back(unflatten(r.estimate));
  for (const auto& m : r.members) perimeters.push_back(unflatten(m));
  nlohmann::json fc = geojson::to_feature_collection(perimeters, {{"step", r.record.step}});
  fc["features"][0]["properties"]["role"] = "mean";
  for (std::size_t i = 1; i < fc["features"].size(); ++i) {
    fc["features"][i]["properties"]["role"] = "member";
    fc["features"][i]["properties"]["index"] = i - 1;
  }
  std::ofstream out(path);
  out << fc.dump(1) << '\n';
}

}  // namespace

ExperimentResult run_to_directory(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const auto start = Clock::now();
  const Scenario scenario = build_scenario(cfg);
  const bool perimeters = scenario.kind == StateKind::perimeter && cfg.write_geojson;

  std::ofstream csv(cfg.out_dir / "records.csv");
  csv << kRecordsCsvHeader << '\n';
  csv.flush();

  ExperimentResult result = run_experiment(cfg.assim, scenario, [&](const StepResult& r) {
    StepRecord rec = r.record;
    if (!cfg.record_timing) rec.wall_time_predict = rec.wall_time_update = 0.0;
    std::ostringstream row;
    write_records_csv(row, {rec});
    const std::string text = row.str();
    csv << text.substr(text.find('\n') + 1);
    csv.flush();
    if (perimeters) write_step_geojson(cfg.out_dir / step_filename(r.record.step), r);
  });
  const double wall = std::chrono::duration<double>(Clock::now() - start).count();

  std::ofstream summary(cfg.out_dir / "summary.txt");
  summary.precision(10);
  summary << "scenario=" << to_string(cfg.scenario) << '\n'
          << "method=" << to_string(cfg.assim.method) << '\n'
          << "steps_completed=" << result.records.size() << '\n'
          << "mean_rmse_truth_km=" << result.mean_rmse_truth() << '\n'
          << "mean_rmse_obs_km=" << result.mean_rmse_obs() << '\n';
  if (cfg.record_timing) summary << "wall_time_s=" << wall << '\n';
  if (result.error) summary << "error=" << *result.error << '\n';
  return result;
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, unsigned threads) {
  struct Cell {
    double a;
    double b;
  };
  std::vector<Cell> cells;
  for (double a : cfg.sweep_eps_alpha)
    for (double b : cfg.sweep_eps_beta) cells.push_back({a, b});

  // Truth, observations and the initial ensemble are shared by every cell.
  const Scenario scenario = build_scenario(cfg);
  std::vector<SweepRow> rows(cells.size());
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  parallel_for(cells.size(), threads, [&](std::size_t i) {
    rows[i] = {cells[i].a, cells[i].b, nan, nan};
    try {
      AssimilationConfig acfg = cfg.assim;
      acfg.ensf.schedule = NoiseSchedule(cells[i].a, cells[i].b);
      acfg.threads = 1;
      const ExperimentResult r = run_experiment(acfg, scenario);
      if (!r.error) rows[i] = {cells[i].a, cells[i].b, r.mean_rmse_truth(), r.mean_rmse_obs()};
    } catch (const std::exception&) {
      // Recorded as a NaN row.
    }
  });

  std::sort(rows.begin(), rows.end(), [](const SweepRow& x, const SweepRow& y) {
    return std::tie(x.eps_alpha, x.eps_beta) < std::tie(y.eps_alpha, y.eps_beta);
  });
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepCsvHeader << '\n';
  const auto old = out.precision(10);
  for (const auto& r : rows)
    out << r.eps_alpha << ',' << r.eps_beta << ',' << r.mean_rmse_truth << ',' << r.mean_rmse_obs << '\n';
  out.precision(old);
}

TimingStats TimingStats::from(std::vector<double> samples) {
  TimingStats s;
  s.samples = std::move(samples);
  if (s.samples.empty()) return s;
  const double n = static_cast<double>(s.samples.size());
  s.mean = std::accumulate(s.samples.begin(), s.samples.end(), 0.0) / n;
  if (s.samples.size() > 1) {
    double ss = 0.0;
    for (double x : s.samples) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

BenchReport run_bench(const RunConfig& cfg, std::size_t trials) {
  if (trials < 2) throw std::invalid_argument("bench needs at least 2 trials");
  RunConfig one = cfg;
  one.assim.steps = 1;
  const Scenario scenario = build_scenario(one);

  AssimilationConfig predict_only = cfg.assim;
  predict_only.method = Method::none;
  predict_only.state_kind = scenario.kind;
  const StepResult predicted = assimilate_step(scenario.initial_members, scenario.steps.at(0), *scenario.model,
                                               predict_only, 1);
  Eigen::MatrixXd members(predicted.members.front().size(), static_cast<Eigen::Index>(predicted.members.size()));
  for (std::size_t i = 0; i < predicted.members.size(); ++i) members.col(static_cast<Eigen::Index>(i)) = predicted.members[i];
  const Ensemble prior(std::move(members));
  const Eigen::VectorXd& y = predicted.observation;

  auto seconds = [](auto&& fn) {
    const auto t0 = Clock::now();
    fn();
    return std::chrono::duration<double>(Clock::now() - t0).count();
  };

  std::vector<double> ensf_times;
  std::vector<double> enkf_times;
  for (std::size_t t = 0; t < trials; ++t) {
    EnsfConfig ecfg = cfg.assim.ensf;
    ecfg.rng_seed = derive_seed(cfg.assim.rng_seed, StreamTag::bench, {t});
    ecfg.threads = cfg.assim.threads;
    ensf_times.push_back(seconds([&] { (void)ensf_update(prior, y, cfg.assim.obs, ecfg); }));
    enkf_times.push_back(seconds(
        [&] { (void)enkf_update(prior, y, cfg.assim.obs, derive_seed(cfg.assim.rng_seed, StreamTag::bench, {t})); }));
  }

  BenchReport report;
  report.ensf = TimingStats::from(std::move(ensf_times));
  report.enkf = TimingStats::from(std::move(enkf_times));
  report.speedup = report.ensf.mean > 0.0 ? report.enkf.mean / report.ensf.mean : 0.0;
  report.dim = prior.dim();
  report.members = prior.size();
  report.reverse_steps = cfg.assim.ensf.n_reverse_steps;
  return report;
}

void write_bench_report(std::ostream& out, const BenchReport& r) {
  const auto old = out.precision(6);
  out << "# analysis-step wall time only (forward model excluded)\n"
      << "# dim=" << r.dim << " members=" << r.members << " reverse_steps=" << r.reverse_steps
      << " trials=" << r.ensf.samples.size() << '\n'
      << "method,mean_s,std_s\n"
      << "ensf," << r.ensf.mean << ',' << r.ensf.stddev << '\n'
      << "enkf," << r.enkf.mean << ',' << r.enkf.stddev << '\n'
      << "# enkf/ensf time ratio: " << r.speedup << '\n';
  out.precision(old);
}

}  // namespace ensf_da
