#pragma once

// Linear Gaussian single-factor state space model:
//   Z_tj | W_t ~ N(rho_obs_j W_t, 1 - rho_obs_j^2)
//   W_t | W_{t-1} ~ N(rho_lat W_{t-1}, 1 - rho_lat^2),  W_0 ~ N(0, 1).
// Serves as the analytic reference for the all-Gaussian copula model.

#include <Eigen/Dense>

#include "cssm/types.hpp"

namespace cssm {

struct GaussSSMParams {
  Eigen::VectorXd rho_obs;
  double rho_lat = 0.0;

  void validate() const;
};

/// Covariance of (Z_11..Z_d1, W_1; ...; Z_1T..Z_dT, W_T).
Eigen::MatrixXd build_sigma(const GaussSSMParams& params, int T);

/// log f(z_obs) by the Kalman filter; unobserved cells are skipped.
double kalman_loglik(const GaussSSMParams& params, const Eigen::MatrixXd& z, const Mask& observed);

/// Dense N(0, Sigma) log density of the full vector (z, w), ordered as in build_sigma.
double dense_joint_logdensity(const GaussSSMParams& params, const Eigen::MatrixXd& z,
                              const Eigen::VectorXd& w);

/// Dense N(0, Sigma_obs) log density of the observed z cells with W marginalized.
double dense_observed_logdensity(const GaussSSMParams& params, const Eigen::MatrixXd& z,
                                 const Mask& observed);

}  // namespace cssm
