#include "ensf_da/enkf.hpp"

#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

#include "ensf_da/error.hpp"
#include "ensf_da/random.hpp"

namespace ensf_da {

Ensemble enkf_update(const Ensemble& prior, const Eigen::Ref<const Eigen::VectorXd>& y,
                     const ObservationModel& obs, std::uint64_t seed) {
  const Eigen::Index d = prior.dim();
  const Eigen::Index n = prior.size();
  const Eigen::Index p = obs.obs_dim(d);
  if (y.size() != p)
    throw std::invalid_argument("enkf_update: observation has dimension " + std::to_string(y.size()) +
                                ", expected " + std::to_string(p));
  if (!y.allFinite()) throw std::invalid_argument("enkf_update: observation is not finite");

  const Eigen::MatrixXd& x = prior.members();
  const Eigen::VectorXd mean = prior.mean();
  const Eigen::MatrixXd anomalies = x.colwise() - mean;
  const Eigen::MatrixXd obs_anomalies = obs.apply(anomalies);
  const double denom = static_cast<double>(n - 1);

  Eigen::MatrixXd innovation_cov(p, p);
  innovation_cov.setZero();
  innovation_cov.selfadjointView<Eigen::Lower>().rankUpdate(obs_anomalies, 1.0 / denom);
  innovation_cov.diagonal().array() += obs.variance();

  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(innovation_cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("enkf_update: innovation covariance is not positive definite", -1, 0.0);

  // Perturbed innovations, one column per member.
  Eigen::MatrixXd innovations = obs.apply(x);
  innovations = -innovations;
  innovations.colwise() += y;
  const double sigma = obs.sigma_obs();
  for (Eigen::Index i = 0; i < n; ++i) {
    Engine engine = substream(seed, StreamTag::enkf, {static_cast<std::uint64_t>(i)});
    StandardNormal normal;
    for (Eigen::Index j = 0; j < p; ++j) innovations(j, i) += sigma * normal(engine);
  }

  const Eigen::MatrixXd weights = llt.solve(innovations);
  Eigen::MatrixXd posterior = x + anomalies * (obs_anomalies.transpose() * weights) / denom;
  if (!posterior.allFinite())
    throw NumericalError("enkf_update: non-finite posterior", -1, 0.0);
  return Ensemble(std::move(posterior));
}

}  // namespace ensf_da
