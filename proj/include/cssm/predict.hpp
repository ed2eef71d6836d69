#pragma once

// Predictive simulation on the copula scale and lifting to the data scale.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "cssm/margins.hpp"
#include "cssm/sampler.hpp"

namespace cssm {

struct PredictiveSamples {
  int margin = 0;  // 0-based
  int t = 0;       // 0-based time index; t >= T for forecasts
  Eigen::VectorXd u;                // R copula-scale values
  std::optional<Eigen::VectorXd> y;  // R data-scale values when a margin model is attached
};

/// One draw per posterior draw from the conditional of U_tj given v_t (t < T).
PredictiveSamples predict_insample(const PosteriorDraws& draws, int j, int t, Rng& rng);

/// Forecast at t >= T: the latent path is propagated t - T + 1 steps past the
/// last fitted state for every posterior draw.
PredictiveSamples predict_oos(const PosteriorDraws& draws, int j, int t, Rng& rng);

/// Forecasts for horizons 1..h of every margin sharing one propagated latent
/// path per draw; result is indexed [h - 1][j].
std::vector<std::vector<PredictiveSamples>> predict_horizon(const PosteriorDraws& draws, int horizon, Rng& rng);

/// Applies y = invBC(f(x) + sigma * Phi^{-1}(u)) to every sample.
Eigen::VectorXd to_data_scale(const PredictiveSamples& samples, const MarginalModel& marg,
                              const Eigen::VectorXd& x_row);

/// Empirical quantile (type 7, linear interpolation).
double empirical_quantile(Eigen::VectorXd values, double p);

struct CredibleBand {
  double lower = 0.0;  // 5%
  double median = 0.0;
  double upper = 0.0;  // 95%
};
CredibleBand credible_band(const Eigen::VectorXd& values, double lower = 0.05, double upper = 0.95);

}  // namespace cssm
