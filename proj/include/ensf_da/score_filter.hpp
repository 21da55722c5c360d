#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

#include "ensf_da/ensemble.hpp"

namespace ensf_da {

/// Linear noise schedule over pseudo-time tau in [0, 1]:
///   alpha(tau)  = 1 - tau (1 - eps_alpha)     (mean decay)
///   beta^2(tau) = eps_beta + tau (1 - eps_beta)  (variance growth)
class NoiseSchedule {
 public:
  NoiseSchedule(double eps_alpha, double eps_beta);

  double eps_alpha() const noexcept { return eps_alpha_; }
  double eps_beta() const noexcept { return eps_beta_; }

  struct Coefficients {
    double alpha;
    double beta_sq;
    /// d log(alpha) / d tau
    double dlog_alpha;
    /// Squared diffusion: d beta^2/d tau - 2 dlog_alpha beta^2
    double g_sq;
  };

  /// Throws std::invalid_argument for tau outside [0, 1].
  Coefficients at(double tau) const;

 private:
  double eps_alpha_;
  double eps_beta_;
};

struct EnsfConfig {
  NoiseSchedule schedule{0.96, 0.03};
  std::size_t n_reverse_steps = 100;
  std::uint64_t rng_seed = 0;
  /// Worker threads over ensemble members; output does not depend on it.
  unsigned threads = 1;
};

/// Score of N(alpha x0, beta^2 I) at x_tau: -(x_tau - alpha x0) / beta^2.
Eigen::VectorXd prior_score(const Eigen::Ref<const Eigen::VectorXd>& x_tau,
                            const Eigen::Ref<const Eigen::VectorXd>& x0, double tau,
                            const NoiseSchedule& schedule);

/// Gradient of log N(y; C x, sigma^2 I) in x: C^T (y - C x) / sigma^2.
Eigen::VectorXd likelihood_score(const Eigen::Ref<const Eigen::VectorXd>& x_tau,
                                 const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const ObservationModel& obs);

/// Damping h(tau) = 1 - tau applied to the likelihood term.
inline double damping(double tau) { return 1.0 - tau; }

/// prior_score + damping(tau) * likelihood_score.
Eigen::VectorXd posterior_score(const Eigen::Ref<const Eigen::VectorXd>& x_tau,
                                const Eigen::Ref<const Eigen::VectorXd>& x0,
                                const Eigen::Ref<const Eigen::VectorXd>& y, double tau,
                                const NoiseSchedule& schedule, const ObservationModel& obs);

/// Ensemble score filter analysis. Each member starts from N(0, I) at
/// tau = 1 and is integrated to tau = 0 with explicit Euler-Maruyama on
/// the reverse-time SDE, using the prior score conditioned on the matching
/// prior member. Member i draws from its own substream of cfg.rng_seed.
/// Throws NumericalError naming the member and tau if the state diverges.
Ensemble ensf_update(const Ensemble& prior, const Eigen::Ref<const Eigen::VectorXd>& y,
                     const ObservationModel& obs, const EnsfConfig& cfg);

}  // namespace ensf_da
