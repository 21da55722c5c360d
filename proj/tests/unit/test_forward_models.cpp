#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "ensf_da/error.hpp"
#include "ensf_da/forward_models.hpp"
#include "ensf_da/random.hpp"

using namespace ensf_da;

namespace {

Eigen::VectorXd zero_drift(const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); }

}  // namespace

TEST(LinearModel, DoublesState) {
  Eigen::VectorXd x(2);
  x << 1, -2;
  const Eigen::VectorXd y = linear_model_step(x);
  EXPECT_EQ(y[0], 2.0);
  EXPECT_EQ(y[1], -4.0);
  EXPECT_EQ(linear_model_step(Eigen::VectorXd::Zero(3)), Eigen::VectorXd::Zero(3));
}

TEST(SdePredict, NoiseFreeStepIsEulerUpdate) {
  // x + 2x dk with x = 1, dk = 0.05.
  const Ensemble prior(Eigen::MatrixXd::Ones(1, 2));
  const Ensemble next = sde_predict(prior, [](const Eigen::VectorXd& x) { return linear_model_step(x); },
                                    {0.05, 0.0}, 1);
  EXPECT_NEAR(next.members()(0, 0), 1.1, 1e-15);
  EXPECT_NEAR(next.members()(0, 1), 1.1, 1e-15);
}

TEST(SdePredict, IncrementVarianceMatchesDiffusion) {
  const Eigen::Index n = 10000;
  const Ensemble prior(Eigen::MatrixXd::Zero(1, n));
  const SdePredictConfig cfg{0.05, 0.5};
  const Ensemble next = sde_predict(prior, zero_drift, cfg, 3);
  const Eigen::RowVectorXd x = next.members().row(0);
  const double expected = cfg.delta_k * cfg.sigma_sde * cfg.sigma_sde;
  const double var = x.array().square().sum() / static_cast<double>(n);
  EXPECT_NEAR(var, expected, 3 * expected * std::sqrt(2.0 / static_cast<double>(n)));
  EXPECT_NEAR(x.mean(), 0.0, 3 * std::sqrt(expected / static_cast<double>(n)));
}

TEST(SdePredict, ReproducibleAndThreadIndependent) {
  const Ensemble prior(Eigen::MatrixXd::Random(30, 17));
  const SdePredictConfig cfg{0.05, 0.5};
  const auto drift = [](const Eigen::VectorXd& x) { return linear_model_step(x); };
  const Ensemble a = sde_predict(prior, drift, cfg, 8, 1);
  EXPECT_EQ(a, sde_predict(prior, drift, cfg, 8, 1));
  EXPECT_EQ(a, sde_predict(prior, drift, cfg, 8, 4));
}

TEST(SdePredict, RejectsInvalidConfigAndReportsMember) {
  const Ensemble prior(Eigen::MatrixXd::Ones(2, 3));
  EXPECT_THROW(sde_predict(prior, zero_drift, {0.0, 0.5}, 1), std::invalid_argument);
  EXPECT_THROW(sde_predict(prior, zero_drift, {0.05, -1.0}, 1), std::invalid_argument);
  const auto bad = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(5).eval(); };
  try {
    (void)sde_predict(prior, bad, {0.05, 0.5}, 1);
    FAIL() << "expected ModelError";
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("member 0"), std::string::npos);
  }
}

TEST(AdditiveNoiseModel, AddsScaledNoiseToInner) {
  const auto inner = std::make_shared<SdeModel>("zero", zero_drift, SdePredictConfig{0.05, 0.0});
  const AdditiveNoiseModel model(inner, {0.25, 2.0});
  Engine a(1), b(1);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(4, 3.0);
  const Eigen::VectorXd out = model.step(x, 1, a);
  // The inner model consumes no draws when its sigma is zero.
  const Eigen::VectorXd w = standard_normal_vector(4, b);
  EXPECT_LT((out - (x + std::sqrt(0.25) * 2.0 * w)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(model.descriptor().parameters.at("sigma_sde"), "2");
}

TEST(SyntheticFire, ZeroGrowthAndLargeThresholdIsNoOp) {
  const Perimeter sq({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  Engine rng(1);
  EXPECT_EQ(synthetic_perimeter_step(sq, {0.0, 0.5, 10.0}, rng), sq);
}

TEST(SyntheticFire, SplitsEveryLongEdge) {
  const Perimeter sq({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  Engine rng(1);
  const Perimeter out = synthetic_perimeter_step(sq, {0.0, 0.0, 0.5}, rng);
  ASSERT_EQ(out.size(), 8u);
  EXPECT_EQ(out[1], (Vertex{0.5, 0}));
  EXPECT_EQ(out[7], (Vertex{0, 0.5}));
}

TEST(SyntheticFire, GrowthMovesVerticesOutward) {
  const Perimeter sq({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}});
  Engine rng(2);
  const Perimeter out = synthetic_perimeter_step(sq, {0.1, 0.0, 100.0}, rng);
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_NEAR(std::hypot(out[i].lon, out[i].lat), std::sqrt(2.0) + 0.1, 1e-12);
}

TEST(SyntheticFire, VertexCountNeverDecreases) {
  const auto model = SyntheticFireModel::for_initial(Perimeter({{-120, 38}, {-119, 38}, {-119, 39}, {-120, 39}}),
                                                     0.05, 0.5);
  Engine rng(3);
  Eigen::VectorXd state = flatten(Perimeter({{-120, 38}, {-119, 38}, {-119, 39}, {-120, 39}}));
  for (std::size_t k = 1; k <= 30; ++k) {
    const Eigen::VectorXd next = model.step(state, k, rng);
    EXPECT_GE(next.size(), state.size());
    state = next;
  }
}

TEST(SyntheticFire, LongChainsStayValid) {
  // 200 chains x 50 steps of strongly jittered growth.
  for (std::uint64_t chain = 0; chain < 200; ++chain) {
    Engine rng = substream(17, StreamTag::predict, {chain});
    Perimeter p({{0, 0}, {0.2, 0}, {0.2, 0.1}, {0.1, 0.2}, {0, 0.1}});
    const SyntheticFireParams params{0.01, 1.0, 0.2};
    for (int k = 0; k < 50; ++k) {
      ASSERT_NO_THROW(p = synthetic_perimeter_step(p, params, rng)) << "chain " << chain << " step " << k;
      ASSERT_GT(p.length(), 0.0);
    }
  }
}

TEST(SyntheticFire, RejectsInvalidParameters) {
  const Perimeter sq({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  Engine rng(1);
  EXPECT_THROW(synthetic_perimeter_step(sq, {-0.1, 0.5, 1.0}, rng), std::invalid_argument);
  EXPECT_THROW(synthetic_perimeter_step(sq, {0.1, 1.5, 1.0}, rng), std::invalid_argument);
  EXPECT_THROW(synthetic_perimeter_step(sq, {0.1, 0.5, 0.0}, rng), std::invalid_argument);
  EXPECT_THROW(SyntheticFireModel({0.1, 0.5, 0.0}), std::invalid_argument);
}
