#pragma once

#include <optional>

#include <Eigen/Core>

namespace ensf_da {

/// N state samples of a common dimension d, stored one member per column.
class Ensemble {
 public:
  /// Validates N >= 2, d >= 1 and finite entries.
  explicit Ensemble(Eigen::MatrixXd members);

  /// Builds from a row-per-member (N x d) array.
  static Ensemble from_rows(const Eigen::Ref<const Eigen::MatrixXd>& rows);

  Eigen::Index dim() const noexcept { return members_.rows(); }
  Eigen::Index size() const noexcept { return members_.cols(); }

  const Eigen::MatrixXd& members() const noexcept { return members_; }
  auto member(Eigen::Index i) const { return members_.col(i); }

  Eigen::VectorXd mean() const { return members_.rowwise().mean(); }

  friend bool operator==(const Ensemble& a, const Ensemble& b) { return a.members_ == b.members_; }

 private:
  Eigen::MatrixXd members_;
};

/// Linear observation operator C with isotropic Gaussian noise:
/// y = C x + e, e ~ N(0, sigma_obs^2 I). C is either c * I or dense.
class ObservationModel {
 public:
  static ObservationModel scaled_identity(double c, double sigma_obs);
  static ObservationModel dense(Eigen::MatrixXd c, double sigma_obs);

  double sigma_obs() const noexcept { return sigma_obs_; }
  double variance() const noexcept { return sigma_obs_ * sigma_obs_; }
  bool is_scaled_identity() const noexcept { return !matrix_.has_value(); }
  double scale() const noexcept { return scale_; }
  const std::optional<Eigen::MatrixXd>& matrix() const noexcept { return matrix_; }

  /// Observation dimension for a state of dimension `state_dim`; throws if
  /// a dense C does not accept that dimension.
  Eigen::Index obs_dim(Eigen::Index state_dim) const;

  /// C x for one state or column-wise for a matrix of states.
  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
  /// C^T r, column-wise.
  Eigen::MatrixXd apply_transpose(const Eigen::Ref<const Eigen::MatrixXd>& r) const;

 private:
  ObservationModel(double scale, std::optional<Eigen::MatrixXd> matrix, double sigma_obs);

  double scale_ = 1.0;
  std::optional<Eigen::MatrixXd> matrix_;
  double sigma_obs_ = 1.0;
};

}  // namespace ensf_da
