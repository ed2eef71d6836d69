#pragma once

// Multinomial No-U-Turn sampler with the generalized no-U-turn criterion,
// dual-averaging step size adaptation and a diagonal metric estimated over
// doubling warmup windows.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "cssm/copula.hpp"

namespace cssm {

/// Returns log density at x and writes its gradient. May throw; a throwing or
/// non-finite evaluation during a trajectory counts as a divergence.
using LogDensityFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct NutsConfig {
  int iterations = 3000;  // including warmup
  int warmup = 1000;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  double init_jitter = 0.5;   // uniform jitter half-width applied to the initial point
  int init_attempts = 100;
  double max_delta_h = 1000.0;  // energy error that marks a divergence

  void validate() const;
};

struct NutsChain {
  Eigen::MatrixXd draws;  // (iterations - warmup) x dim
  std::vector<double> log_density;
  std::vector<double> accept_stat;
  std::vector<int> tree_depth;
  std::vector<int> n_leapfrog;
  std::vector<bool> divergent;
  int divergences = 0;  // post-warmup
  double step_size = 0.0;
  Eigen::VectorXd inv_metric;
  Eigen::VectorXd initial_point;
};

NutsChain nuts_sample(const LogDensityFn& target, const Eigen::VectorXd& init, const NutsConfig& cfg,
                      Rng& rng);

/// Geyer initial-monotone-sequence effective sample size over chains.
double effective_sample_size(const std::vector<std::vector<double>>& chains);
/// Split R-hat (each chain halved).
double split_rhat(const std::vector<std::vector<double>>& chains);

}  // namespace cssm
