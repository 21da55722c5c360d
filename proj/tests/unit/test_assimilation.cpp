#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "ensf_da/assimilation.hpp"
#include "ensf_da/error.hpp"
#include "ensf_da/scenarios.hpp"
#include "support/polygons.hpp"

using namespace ensf_da;

namespace {

class IdentityModel : public ForwardModel {
 public:
  Eigen::VectorXd step(const Eigen::VectorXd& x, std::size_t, Engine&) const override { return x; }
  ModelDescriptor descriptor() const override { return {"identity", {}}; }
};

// Fails from step `from` on, for states whose first coordinate is below `below`.
class FlakyModel : public ForwardModel {
 public:
  FlakyModel(std::size_t from, double below) : from_(from), below_(below) {}
  Eigen::VectorXd step(const Eigen::VectorXd& x, std::size_t k, Engine&) const override {
    if (k >= from_ && x[0] < below_) throw ModelError("flaky");
    return x;
  }
  ModelDescriptor descriptor() const override { return {"flaky", {}}; }

 private:
  std::size_t from_;
  double below_;
};

Scenario vector_scenario(std::shared_ptr<const ForwardModel> model, std::size_t n, std::size_t steps, Eigen::Index d = 4) {
  Scenario s;
  s.name = "test";
  s.model = std::move(model);
  for (std::size_t i = 0; i < n; ++i)
    s.initial_members.push_back(Eigen::VectorXd::Constant(d, static_cast<double>(i) - 1.0));
  for (std::size_t k = 0; k < steps; ++k) s.steps.push_back({Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)});
  return s;
}

AssimilationConfig config(Method m, std::size_t n, std::size_t steps) {
  AssimilationConfig c;
  c.method = m;
  c.ensemble_size = n;
  c.steps = steps;
  c.obs = ObservationModel::scaled_identity(1.0, 0.5);
  c.rng_seed = 3;
  return c;
}

// Regular polygon starting at angle 0 and running clockwise about (cx, cy).
Perimeter clockwise_regular(double cx, double cy, double r, std::size_t n) {
  std::vector<Vertex> v;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    v.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
  }
  return Perimeter(std::move(v));
}

}  // namespace

TEST(Harmonize, AlreadyHarmonizedInputsOnlyFlatten) {
  const Perimeter a = clockwise_regular(-120, 38, 0.5, 8);
  const Perimeter b = clockwise_regular(-120, 38, 0.6, 8);
  const Perimeter obs = clockwise_regular(-120, 38, 0.55, 8);
  const Harmonized h = harmonize({a, b}, obs);
  EXPECT_EQ(h.vertex_count, 8u);
  EXPECT_LT((h.ensemble.members().col(0) - flatten(a)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((h.ensemble.members().col(1) - flatten(b)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((h.observation - flatten(obs)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Harmonize, UsesLargestVertexCount) {
  std::mt19937_64 rng(1);
  std::vector<Perimeter> members;
  for (std::size_t n : {5u, 8u, 6u}) members.emplace_back(test_support::random_star(rng, n, -120, 38, 0.3));
  const Harmonized h = harmonize(members, Perimeter(test_support::random_star(rng, 7, -120, 38, 0.3)));
  EXPECT_EQ(h.vertex_count, 8u);
  EXPECT_EQ(h.ensemble.dim(), 16);
  EXPECT_EQ(h.ensemble.size(), 3);
  EXPECT_EQ(h.observation.size(), 16);
}

TEST(Harmonize, DimensionIsTwiceMaxCountOnRandomSets) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> count(3, 40);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Perimeter> members;
    std::size_t largest = 0;
    for (int i = 0; i < 4; ++i) {
      const std::size_t n = count(rng);
      members.emplace_back(test_support::random_star(rng, n, 10, 10));
      largest = std::max(largest, members.back().size());
    }
    const Perimeter obs(test_support::random_star(rng, count(rng), 10, 10));
    largest = std::max(largest, obs.size());
    const Harmonized h = harmonize(members, obs);
    EXPECT_EQ(h.ensemble.dim(), 2 * static_cast<Eigen::Index>(largest));
    for (Eigen::Index i = 0; i < h.ensemble.size(); ++i)
      EXPECT_LT(signed_area(unflatten(h.ensemble.member(i))), 0.0);
  }
}

TEST(Harmonize, MemberIdenticalToObservationHasZeroError) {
  const Perimeter p({{-120, 38}, {-119, 38.2}, {-119.4, 39}});
  const Harmonized h = harmonize({p, p}, p);
  EXPECT_EQ(rmse_haversine_flat(h.ensemble.member(0), h.observation), 0.0);
}

TEST(Harmonize, ErrorsNameTheMember) {
  const Perimeter p({{0, 0}, {1, 0}, {1, 1}});
  const Perimeter flat({{0, 0}, {1, 0}, {2, 0}});
  try {
    (void)harmonize({p, flat}, p);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("member 1"), std::string::npos);
  }
}

TEST(AssimilateStep, NoneMethodPassesPredictionThrough) {
  const auto cfg = config(Method::none, 5, 1);
  const SdeModel model("linear", [](const Eigen::VectorXd& x) { return linear_model_step(x); }, {0.05, 0.5});
  const Scenario s = vector_scenario(nullptr, 5, 1);
  const StepResult r = assimilate_step(s.initial_members, s.steps[0], model, cfg, 1);
  for (std::size_t i = 0; i < 5; ++i) {
    Engine rng = substream(cfg.rng_seed, StreamTag::predict, {1, i});
    EXPECT_EQ(r.members[i], model.step(s.initial_members[i], 1, rng));
  }
  EXPECT_EQ(r.record.members, 5u);
  EXPECT_EQ(r.record.harmonized_dim, 4u);
}

TEST(AssimilateStep, NoneMethodRmseIsOpenLoopError) {
  const auto cfg = config(Method::none, 3, 1);
  const Scenario s = vector_scenario(std::make_shared<IdentityModel>(), 3, 1, 2);
  const StepResult r = assimilate_step(s.initial_members, s.steps[0], *s.model, cfg, 1);
  // Mean state is (0, 0) = truth.
  ASSERT_TRUE(r.record.rmse_vs_truth);
  EXPECT_EQ(*r.record.rmse_vs_truth, 0.0);
}

TEST(AssimilateStep, PerimeterStepWithIdentityNoiseSettings) {
  // C = I, sigma_obs^2 = 0.25, 200 reverse steps, unit process noise.
  SyntheticFireScenarioParams p;
  p.sigma_obs = 0.5;
  p.sigma_sde = 1.0;
  const Scenario s = make_synthetic_fire(p, 20, 3, 1, 2);
  AssimilationConfig cfg = config(Method::ensf, 20, 3);
  cfg.obs = ObservationModel::scaled_identity(1.0, 0.5);
  cfg.ensf.n_reverse_steps = 200;
  const ExperimentResult r = run_experiment(cfg, s);
  EXPECT_FALSE(r.error) << *r.error;
  EXPECT_EQ(r.records.size(), 3u);
}

TEST(AssimilateStep, PerimeterOverloadReturnsValidPerimeters) {
  const Perimeter obs = clockwise_regular(-120, 38, 0.5, 10);
  std::vector<Perimeter> state{clockwise_regular(-120, 38, 0.45, 7), clockwise_regular(-120.02, 38, 0.5, 9),
                               clockwise_regular(-120, 38.01, 0.52, 8)};
  const auto model = SyntheticFireModel::for_initial(state[0], 0.01, 0.2);
  AssimilationConfig cfg = config(Method::enkf, 3, 1);
  cfg.obs = ObservationModel::scaled_identity(1.0, 0.05);
  const auto [members, record] = assimilate_step(state, obs, obs, model, cfg, 1);
  EXPECT_EQ(members.size(), 3u);
  EXPECT_EQ(record.harmonized_dim, 2 * members[0].size());
  EXPECT_TRUE(record.rmse_vs_truth);
}

TEST(AssimilateStep, EnsfObservationErrorShrinksWithNoise) {
  // Observation equals truth, C = I; smaller sigma_obs pulls harder.
  const Eigen::Index d = 20;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  std::vector<Eigen::VectorXd> members;
  for (int i = 0; i < 30; ++i) {
    Eigen::VectorXd x(d);
    for (auto& v : x) v = 1.0 + n(rng);
    members.push_back(x);
  }
  const StepInput input{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
  const IdentityModel model;
  double previous = INFINITY;
  for (double sigma : {10.0, 1.0, 0.1}) {
    AssimilationConfig cfg = config(Method::ensf, 30, 1);
    cfg.obs = ObservationModel::scaled_identity(1.0, sigma);
    cfg.ensf.n_reverse_steps = 500;
    const double err = assimilate_step(members, input, model, cfg, 1).record.rmse_vs_obs;
    EXPECT_LT(err, previous) << "sigma=" << sigma;
    previous = err;
  }
}

TEST(AssimilateStep, DropsFailedMembers) {
  const auto cfg = config(Method::enkf, 4, 1);
  const FlakyModel model(1, -0.5);  // member 0 starts at -1
  const Scenario s = vector_scenario(nullptr, 4, 1);
  const StepResult r = assimilate_step(s.initial_members, s.steps[0], model, cfg, 1);
  EXPECT_EQ(r.members.size(), 3u);

  auto strict = cfg;
  strict.drop_failed_members = false;
  EXPECT_THROW(assimilate_step(s.initial_members, s.steps[0], model, strict, 1), StepError);

  const FlakyModel everyone(1, 100.0);
  try {
    (void)assimilate_step(s.initial_members, s.steps[0], everyone, cfg, 7);
    FAIL() << "expected StepError";
  } catch (const StepError& e) {
    EXPECT_EQ(e.step(), 7u);
  }
}

TEST(RunExperiment, ReproducibleAcrossRunsAndThreads) {
  const Scenario s = make_synthetic_fire({}, 12, 5, 3, 4);
  AssimilationConfig cfg = config(Method::ensf, 12, 5);
  cfg.obs = ObservationModel::scaled_identity(1.0, 0.1);
  const ExperimentResult a = run_experiment(cfg, s);
  const ExperimentResult b = run_experiment(cfg, s);
  cfg.threads = 8;
  const ExperimentResult c = run_experiment(cfg, s);
  ASSERT_FALSE(a.error);
  ASSERT_EQ(a.final_members.size(), c.final_members.size());
  for (std::size_t i = 0; i < a.final_members.size(); ++i) {
    EXPECT_EQ(a.final_members[i], b.final_members[i]);
    EXPECT_EQ(a.final_members[i], c.final_members[i]);
  }
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].rmse_vs_truth, c.records[k].rmse_vs_truth);
    EXPECT_EQ(a.records[k].harmonized_dim, c.records[k].harmonized_dim);
  }
}

TEST(RunExperiment, KeepsCompletedStepsOnFailure) {
  const Scenario s = vector_scenario(std::make_shared<FlakyModel>(3, 100.0), 4, 5);
  const ExperimentResult r = run_experiment(config(Method::enkf, 4, 5), s);
  EXPECT_EQ(r.records.size(), 2u);
  ASSERT_TRUE(r.error);
  EXPECT_EQ(r.failed_step, 3u);
  EXPECT_NE(r.error->find("step 3"), std::string::npos);
}

TEST(RunExperiment, ValidatesScenarioAgainstConfig) {
  const Scenario s = vector_scenario(std::make_shared<IdentityModel>(), 4, 2);
  EXPECT_THROW(run_experiment(config(Method::none, 4, 3), s), std::invalid_argument);
  EXPECT_THROW(run_experiment(config(Method::none, 5, 2), s), std::invalid_argument);
  EXPECT_THROW(run_experiment(config(Method::none, 1, 2), s), std::invalid_argument);
}

TEST(RecordsCsv, HeaderAndMissingTruth) {
  StepRecord rec;
  rec.step = 2;
  rec.rmse_vs_obs = 1.5;
  rec.harmonized_dim = 16;
  std::ostringstream out;
  write_records_csv(out, {rec});
  EXPECT_EQ(out.str(), "step,rmse_truth_km,rmse_obs_km,dim,t_predict_s,t_update_s\n2,nan,1.5,16,0,0\n");
}

TEST(Method, ParseRoundTrip) {
  for (Method m : {Method::ensf, Method::enkf, Method::none}) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_THROW(parse_method("kalman"), std::invalid_argument);
}
