#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "ensf_da/ensemble.hpp"

namespace ensf_da {

/// Stochastic (perturbed-observation) ensemble Kalman analysis, no
/// localization or inflation. The gain is formed in observation space from
/// the anomalies A:
///   K = A (CA)^T [ (CA)(CA)^T / (N-1) + sigma^2 I ]^-1 / (N-1)
/// and member i moves by K (y + eta_i - C x_i), eta_i ~ N(0, sigma^2 I)
/// drawn from substream i of `seed`. Throws NumericalError if the
/// innovation covariance cannot be factored.
Ensemble enkf_update(const Ensemble& prior, const Eigen::Ref<const Eigen::VectorXd>& y,
                     const ObservationModel& obs, std::uint64_t seed);

}  // namespace ensf_da
