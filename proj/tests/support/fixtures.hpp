#pragma once

// Parameter sets shared by unit and acceptance tests.

#include <cmath>
#include <numbers>
#include <vector>

#include "cssm/model.hpp"

namespace fixture {

inline double rho_to_tau(double rho) { return 2.0 / std::numbers::pi * std::asin(rho); }
inline double tau_to_rho(double tau) { return std::sin(std::numbers::pi * tau / 2.0); }

/// Scenario s in {1, 2, 3}: d = 6, tau_obs = (0.5, 0.7, ...), two Gaussian,
/// two Clayton and two Gumbel margins; latent Gaussian, Clayton or Gumbel.
inline cssm::ModelParams scenario(int s) {
  using cssm::FamilyKind;
  cssm::ModelParams p;
  p.m_obs = {FamilyKind::Gaussian, FamilyKind::Gaussian, FamilyKind::Clayton,
             FamilyKind::Clayton,  FamilyKind::Gumbel,   FamilyKind::Gumbel};
  p.tau_obs.resize(6);
  p.tau_obs << 0.5, 0.7, 0.5, 0.7, 0.5, 0.7;
  p.tau_lat = 0.7;
  p.m_lat = s == 1 ? FamilyKind::Gaussian : s == 2 ? FamilyKind::Clayton : FamilyKind::Gumbel;
  return p;
}

inline cssm::ModelParams uniform_params(int d, double tau_obs, double tau_lat, cssm::FamilyKind kind) {
  cssm::ModelParams p;
  p.tau_obs = Eigen::VectorXd::Constant(d, tau_obs);
  p.tau_lat = tau_lat;
  p.m_obs.assign(d, kind);
  p.m_lat = kind;
  return p;
}

inline const std::vector<cssm::FamilyKind>& all_families() {
  static const std::vector<cssm::FamilyKind> f{cssm::FamilyKind::Gaussian, cssm::FamilyKind::StudentT4,
                                               cssm::FamilyKind::Clayton, cssm::FamilyKind::Gumbel};
  return f;
}

}  // namespace fixture
