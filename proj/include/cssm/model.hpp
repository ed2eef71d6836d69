#pragma once

// Single-factor copula state space model on the copula scale.
//
//   (U_tj, V_t)     ~ C^{m_obs,j}(.,.; tau_obs,j)    observation copulas
//   (V_t, V_{t-1})  ~ C^{m_lat}(.,.; tau_lat)        latent D-vine (first tree)
//
// Rotations of Clayton/Gumbel follow the sign of tau (90 degrees for tau < 0),
// so a family indicator is a FamilyKind.

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "cssm/copula.hpp"
#include "cssm/detail/kernels.hpp"
#include "cssm/types.hpp"

namespace cssm {

struct CopulaScaleData {
  Eigen::MatrixXd u;  // T x d; unobserved cells are ignored
  Mask observed;      // T x d

  int T() const { return static_cast<int>(u.rows()); }
  int d() const { return static_cast<int>(u.cols()); }
  int observed_count(int j) const { return static_cast<int>(observed.col(j).count()); }

  static CopulaScaleData fully_observed(Eigen::MatrixXd u);
  /// Throws DomainError if shapes disagree or an observed cell is outside (0, 1).
  void validate() const;
  /// Copy with every cell of column j marked missing.
  CopulaScaleData without_margin(int j) const;
};

struct ModelParams {
  Eigen::VectorXd v;        // latent path in (0,1)^T
  Eigen::VectorXd tau_obs;  // d
  double tau_lat = 0.0;
  std::vector<FamilyKind> m_obs;
  FamilyKind m_lat = FamilyKind::Gaussian;

  int d() const { return static_cast<int>(tau_obs.size()); }
  CopulaSpec obs_spec(int j) const { return CopulaSpec::auto_rotated(m_obs.at(j), tau_obs[j]); }
  CopulaSpec lat_spec() const { return CopulaSpec::auto_rotated(m_lat, tau_lat); }
  /// Checks tau ranges and vector lengths (not the identifiability sign).
  void validate() const;
};

inline constexpr double kPriorBetaA = 10.0;
inline constexpr double kPriorBetaB = 1.5;

/// Sum over observed cells of log c^{m_obs,j}(u_tj, v_t; tau_obs,j).
double loglik_obs(const CopulaScaleData& data, const ModelParams& params);

/// Sum over t >= 2 of log c^{m_lat}(v_t, v_{t-1}; tau_lat); v_1 is uniform.
double latent_prior_logdensity(std::span<const double> v, double tau_lat, FamilyKind m_lat);

/// loglik_obs + latent prior + log Beta(10, 1.5) density at tau_obs,1.
double log_posterior(const CopulaScaleData& data, const ModelParams& params);

// ---------------------------------------------------------------------------
// Unconstrained parametrization of the continuous parameters.
//
// Layout: [w_1..w_T, eta_obs_1..eta_obs_d, eta_lat] with
//   v_t = Phi(w_t),  tau_obs,1 = c * logistic(eta),  other taus = c * tanh(eta),
// c = 1 - 2 * kTauGuard.

struct ContinuousParams {
  Eigen::VectorXd v;
  Eigen::VectorXd tau_obs;
  double tau_lat = 0.0;
};

class Reparametrization {
 public:
  Reparametrization(int T, int d) : T_(T), d_(d) {}

  int T() const { return T_; }
  int d() const { return d_; }
  int dim() const { return T_ + d_ + 1; }

  ContinuousParams constrain(const Eigen::VectorXd& x) const;
  Eigen::VectorXd unconstrain(const ContinuousParams& p) const;
  /// log |d constrained / d x|.
  double log_jacobian(const Eigen::VectorXd& x) const;

  double tau_first(double eta) const;
  double tau_other(double eta) const;
  double dtau_first(double eta) const;
  double dtau_other(double eta) const;

 private:
  int T_;
  int d_;
};

/// Log posterior with family indicators summed out, on the unconstrained
/// scale (log-Jacobian included). Observed-cell transforms are computed once.
class MarginalizedPosterior {
 public:
  MarginalizedPosterior(const CopulaScaleData& data, std::vector<FamilyKind> family_set);

  int dim() const { return reparam_.dim(); }
  const Reparametrization& reparam() const { return reparam_; }
  const std::vector<FamilyKind>& family_set() const { return families_; }

  double value(const Eigen::VectorXd& x) const;
  /// Value and gradient; grad is resized to dim().
  double value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;

 private:
  struct Cell {
    int t;
    detail::ArgCache cache;
  };
  template <bool Grad>
  double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const;

  Reparametrization reparam_;
  std::vector<FamilyKind> families_;
  std::vector<std::vector<Cell>> cells_;  // per margin, observed cells in time order
};

/// Convenience wrapper matching the free-function form of the operation.
double log_posterior_marginalized(const CopulaScaleData& data, const Eigen::VectorXd& x,
                                  const std::vector<FamilyKind>& family_set, Eigen::VectorXd& grad);

struct FamilyProbabilities {
  std::vector<std::vector<double>> obs;  // d vectors over the family set
  std::vector<double> lat;
};

/// Full conditionals of the family indicators at fixed continuous parameters.
FamilyProbabilities gibbs_family_probs(const CopulaScaleData& data, const ModelParams& params,
                                       const std::vector<FamilyKind>& family_set);

struct SimulationResult {
  CopulaScaleData data;
  Eigen::VectorXd v;
};

/// Draws a latent path and fully observed data; params.v is ignored.
SimulationResult simulate(const ModelParams& params, int T, Rng& rng);

struct MarginQuadrature {
  int nodes = 64;            // per dimension
  double normal_range = 8.0;  // integrate the latent normal score over [-r, r]
};

/// Density of (U_tj, U_tj') with the latent state integrated out.
double bivariate_margin_density_crosssection(int j, int j2, const ModelParams& params, double u,
                                             double u2, const MarginQuadrature& q = {});
/// Density of (U_tj, U_{t-1,j}) with (V_t, V_{t-1}) integrated out.
double bivariate_margin_density_temporal(int j, const ModelParams& params, double u, double u_prev,
                                         const MarginQuadrature& q = {});

/// Grid versions: entry (a, b) is the density at (grid[a], grid[b]); for the
/// temporal margin a indexes u and b indexes u_prev.
Eigen::MatrixXd bivariate_margin_density_crosssection_grid(int j, int j2, const ModelParams& params,
                                                           const Eigen::VectorXd& grid,
                                                           const MarginQuadrature& q = {});
Eigen::MatrixXd bivariate_margin_density_temporal_grid(int j, const ModelParams& params,
                                                       const Eigen::VectorXd& grid,
                                                       const MarginQuadrature& q = {});

}  // namespace cssm
