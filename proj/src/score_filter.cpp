#include "ensf_da/score_filter.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ensf_da/error.hpp"
#include "ensf_da/parallel.hpp"
#include "ensf_da/random.hpp"

namespace ensf_da {

NoiseSchedule::NoiseSchedule(double eps_alpha, double eps_beta)
    : eps_alpha_(eps_alpha), eps_beta_(eps_beta) {
  if (!(eps_alpha > 0.0 && eps_alpha < 1.0))
    throw std::invalid_argument("eps_alpha must lie in (0, 1)");
  if (!(eps_beta > 0.0 && eps_beta < 1.0))
    throw std::invalid_argument("eps_beta must lie in (0, 1)");
}

NoiseSchedule::Coefficients NoiseSchedule::at(double tau) const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
  Coefficients c{};
  c.alpha = 1.0 - tau * (1.0 - eps_alpha_);
  c.beta_sq = eps_beta_ + tau * (1.0 - eps_beta_);
  c.dlog_alpha = -(1.0 - eps_alpha_) / c.alpha;
  c.g_sq = (1.0 - eps_beta_) - 2.0 * c.dlog_alpha * c.beta_sq;
  return c;
}

Eigen::VectorXd prior_score(const Eigen::Ref<const Eigen::VectorXd>& x_tau,
                            const Eigen::Ref<const Eigen::VectorXd>& x0, double tau,
                            const NoiseSchedule& schedule) {
  if (x_tau.size() != x0.size()) throw std::invalid_argument("prior_score: dimension mismatch");
  const auto c = schedule.at(tau);
  return -(x_tau - c.alpha * x0) / c.beta_sq;
}

Eigen::VectorXd likelihood_score(const Eigen::Ref<const Eigen::VectorXd>& x_tau,
                                 const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const ObservationModel& obs) {
  if (y.size() != obs.obs_dim(x_tau.size()))
    throw std::invalid_argument("likelihood_score: observation dimension mismatch");
  const Eigen::MatrixXd residual = y - obs.apply(x_tau);
  return obs.apply_transpose(residual) / obs.variance();
}

Eigen::VectorXd posterior_score(const Eigen::Ref<const Eigen::VectorXd>& x_tau,
                                const Eigen::Ref<const Eigen::VectorXd>& x0,
                                const Eigen::Ref<const Eigen::VectorXd>& y, double tau,
                                const NoiseSchedule& schedule, const ObservationModel& obs) {
  return prior_score(x_tau, x0, tau, schedule) + damping(tau) * likelihood_score(x_tau, y, obs);
}

namespace {

[[noreturn]] void diverged(Eigen::Index member, double tau) {
  std::ostringstream msg;
  msg << "ensf_update: non-finite state for member " << member << " at tau=" << tau;
  throw NumericalError(msg.str(), member, tau);
}

}  // namespace

Ensemble ensf_update(const Ensemble& prior, const Eigen::Ref<const Eigen::VectorXd>& y,
                     const ObservationModel& obs, const EnsfConfig& cfg) {
  if (cfg.n_reverse_steps < 1) throw std::invalid_argument("n_reverse_steps must be at least 1");
  const Eigen::Index d = prior.dim();
  if (y.size() != obs.obs_dim(d))
    throw std::invalid_argument("ensf_update: observation has dimension " + std::to_string(y.size()) +
                                ", expected " + std::to_string(obs.obs_dim(d)));
  if (!y.allFinite()) throw std::invalid_argument("ensf_update: observation is not finite");

  const std::size_t steps = cfg.n_reverse_steps;
  const double dt = 1.0 / static_cast<double>(steps);
  const double inv_var = 1.0 / obs.variance();
  const bool scalar_c = obs.is_scaled_identity();
  const double c = obs.scale();

  Eigen::MatrixXd posterior(d, prior.size());

  parallel_for(static_cast<std::size_t>(prior.size()), cfg.threads, [&](std::size_t i) {
    const auto member = static_cast<Eigen::Index>(i);
    Engine engine = substream(cfg.rng_seed, StreamTag::ensf, {i});
    StandardNormal normal;
    const auto x0 = prior.member(member);

    Eigen::VectorXd z(d);
    for (Eigen::Index j = 0; j < d; ++j) z[j] = normal(engine);
    Eigen::VectorXd lik(scalar_c ? 0 : d);

    for (std::size_t n = 0; n < steps; ++n) {
      // Left point of [tau - dt, tau]; tau decreases from 1 to 0.
      const double tau = 1.0 - static_cast<double>(n) * dt;
      const auto k = cfg.schedule.at(tau);
      const double h = damping(tau);
      const double inv_beta_sq = 1.0 / k.beta_sq;
      const double noise_scale = std::sqrt(dt * k.g_sq);
      const double decay = 1.0 - dt * k.dlog_alpha;
      const double pull = dt * k.g_sq;

      if (scalar_c) {
        const double lik_w = h * c * inv_var;
        for (Eigen::Index j = 0; j < d; ++j) {
          const double zj = z[j];
          const double score = (k.alpha * x0[j] - zj) * inv_beta_sq + lik_w * (y[j] - c * zj);
          z[j] = decay * zj + pull * score + noise_scale * normal(engine);
        }
      } else {
        lik = obs.apply_transpose(y - obs.apply(z)) * (h * inv_var);
        for (Eigen::Index j = 0; j < d; ++j) {
          const double zj = z[j];
          const double score = (k.alpha * x0[j] - zj) * inv_beta_sq + lik[j];
          z[j] = decay * zj + pull * score + noise_scale * normal(engine);
        }
      }
      if (!z.allFinite()) diverged(member, tau);
    }
    posterior.col(member) = z;
  });

  return Ensemble(std::move(posterior));
}

}  // namespace ensf_da
