#include "ensf_da/ensemble.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ensf_da {

Ensemble::Ensemble(Eigen::MatrixXd members) : members_(std::move(members)) {
  if (members_.cols() < 2)
    throw std::invalid_argument("ensemble needs at least 2 members, got " +
                                std::to_string(members_.cols()));
  if (members_.rows() < 1) throw std::invalid_argument("ensemble members have zero dimension");
  if (!members_.allFinite()) throw std::invalid_argument("ensemble contains non-finite entries");
}

Ensemble Ensemble::from_rows(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  return Ensemble(rows.transpose());
}

ObservationModel::ObservationModel(double scale, std::optional<Eigen::MatrixXd> matrix, double sigma_obs)
    : scale_(scale), matrix_(std::move(matrix)), sigma_obs_(sigma_obs) {
  if (!(sigma_obs_ > 0.0) || !std::isfinite(sigma_obs_))
    throw std::invalid_argument("sigma_obs must be positive and finite");
  if (!std::isfinite(scale_)) throw std::invalid_argument("observation scale must be finite");
  if (matrix_ && !matrix_->allFinite())
    throw std::invalid_argument("observation matrix has non-finite entries");
}

ObservationModel ObservationModel::scaled_identity(double c, double sigma_obs) {
  return ObservationModel(c, std::nullopt, sigma_obs);
}

ObservationModel ObservationModel::dense(Eigen::MatrixXd c, double sigma_obs) {
  if (c.rows() < 1 || c.cols() < 1) throw std::invalid_argument("observation matrix is empty");
  return ObservationModel(1.0, std::move(c), sigma_obs);
}

Eigen::Index ObservationModel::obs_dim(Eigen::Index state_dim) const {
  if (!matrix_) return state_dim;
  if (matrix_->cols() != state_dim)
    throw std::invalid_argument("observation matrix has " + std::to_string(matrix_->cols()) +
                                " columns but the state has dimension " + std::to_string(state_dim));
  return matrix_->rows();
}

Eigen::MatrixXd ObservationModel::apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (!matrix_) return scale_ * x;
  obs_dim(x.rows());
  return *matrix_ * x;
}

Eigen::MatrixXd ObservationModel::apply_transpose(const Eigen::Ref<const Eigen::MatrixXd>& r) const {
  if (!matrix_) return scale_ * r;
  if (r.rows() != matrix_->rows())
    throw std::invalid_argument("residual dimension does not match the observation matrix");
  return matrix_->transpose() * r;
}

}  // namespace ensf_da
