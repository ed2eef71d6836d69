#pragma once

// Log-density kernels with exact first derivatives. The model evaluates these
// on precomputed argument transforms so that the quantile functions are paid
// once per data cell (and once per latent state per gradient), not once per
// family and cell.

#include "cssm/copula.hpp"

namespace cssm::detail {

/// Transforms of a copula argument u in (0, 1) used by the family kernels.
struct ArgCache {
  double u = 0.5;
  double log_u = 0.0;       // log u
  double log_1mu = 0.0;     // log(1 - u)
  double lnl_u = 0.0;       // log(-log u)
  double lnl_1mu = 0.0;     // log(-log(1 - u))
  double z = 0.0;           // Phi^{-1}(u)
  double logphi_z = 0.0;    // log phi(z)
  double x4 = 0.0;          // T4^{-1}(u)
  double logt4_x = 0.0;     // log t4(x4)
  double inv_phi = 0.0;     // 1 / phi(z)
  double inv_t4 = 0.0;      // 1 / t4(x4)
  double inv_u = 0.0;       // 1 / u
  double inv_1mu = 0.0;     // 1 / (1 - u)
  bool clamped = false;     // u hit the clamp; derivatives w.r.t. u vanish

  static ArgCache from_u(double u);
  /// Builds the cache for u = Phi(w), keeping tail precision of both u and 1-u.
  static ArgCache from_normal_score(double w);

  /// Cache of 1 - u.
  ArgCache flipped() const {
    ArgCache f = *this;
    f.u = 1.0 - u;
    f.log_u = log_1mu;
    f.log_1mu = log_u;
    f.lnl_u = lnl_1mu;
    f.lnl_1mu = lnl_u;
    f.z = -z;
    f.x4 = -x4;
    f.inv_u = inv_1mu;
    f.inv_1mu = inv_u;
    return f;
  }
};

/// Family, rotation and natural parameter with derived constants.
struct KernelParams {
  FamilyKind kind = FamilyKind::Gaussian;
  Rotation rotation = Rotation::R0;
  double tau = 0.0;
  double theta = 0.0;        // rho or theta
  double dtheta_dtau = 0.0;
  // Gaussian / t4
  double s = 1.0;            // 1 - rho^2
  double half_log_s = 0.0;
  // Clayton
  double log1p_theta = 0.0;
};

KernelParams make_params(const CopulaSpec& spec);
/// Rotation chosen from the sign of tau; the caller has validated tau.
KernelParams make_params(FamilyKind kind, double tau);

struct Terms {
  double value = 0.0;
  double d_tau = 0.0;
  double d_a = 0.0;  // derivative w.r.t. the first argument (probability scale)
  double d_b = 0.0;
};

/// log c(a, b) and its partial derivatives.
Terms log_density(const KernelParams& p, const ArgCache& a, const ArgCache& b);
/// log c(a, b) only.
double log_density_value(const KernelParams& p, const ArgCache& a, const ArgCache& b);

}  // namespace cssm::detail
