#pragma once

// Posterior simulation: NUTS over the family-marginalized continuous
// posterior, then one Gibbs draw of the family indicators per retained draw.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cssm/model.hpp"
#include "cssm/nuts.hpp"

namespace cssm {

struct SamplerConfig {
  int iterations = 3000;
  int warmup = 1000;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 1;
  int chains = 4;
  int threads = 0;  // 0: one thread per chain, capped by hardware concurrency

  void validate() const;
  NutsConfig nuts() const;
};

struct ParameterDiagnostics {
  std::string name;
  double mean = 0.0;
  double ess = 0.0;
  double rhat = 0.0;
};

struct PosteriorDraws {
  int T = 0;
  int d = 0;
  std::vector<FamilyKind> family_set;

  std::vector<int> chain;      // R
  std::vector<int> iteration;  // post-warmup index within the chain
  Eigen::MatrixXd tau_obs;     // R x d
  Eigen::VectorXd tau_lat;     // R
  Eigen::MatrixXd v;           // R x T
  std::vector<std::vector<FamilyKind>> m_obs;  // R x d
  std::vector<FamilyKind> m_lat;               // R
  std::vector<double> log_post;  // unmarginalized log posterior at the sampled families

  std::vector<double> accept_stat;
  std::vector<double> step_size;  // per chain
  std::vector<int> chain_divergences;
  int divergences = 0;
  std::vector<ParameterDiagnostics> diagnostics;  // tau_obs_j, tau_lat, then v_t
  std::vector<std::string> warnings;

  int size() const { return static_cast<int>(chain.size()); }
  ModelParams draw(int r) const;
  /// Share of draws carrying each family of the set, per margin (d rows) and latent (last row).
  std::vector<std::vector<double>> family_frequencies() const;
  /// Most frequent family per margin followed by the latent one; ties go to the earlier family.
  std::vector<FamilyKind> family_modes() const;
};

/// Draws the family indicators from their full conditionals at fixed continuous parameters.
void sample_families(const CopulaScaleData& data, ModelParams& params,
                     const std::vector<FamilyKind>& family_set, Rng& rng);

PosteriorDraws fit(const CopulaScaleData& data, const std::vector<FamilyKind>& family_set,
                   const SamplerConfig& cfg);

/// Stream seed for a (seed, chain, stream) triple.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t chain, std::uint64_t stream);

}  // namespace cssm
