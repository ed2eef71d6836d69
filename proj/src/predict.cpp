#include "cssm/predict.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "cssm/distributions.hpp"
#include "cssm/errors.hpp"

namespace cssm {

namespace {

void check_margin(const PosteriorDraws& draws, int j) {
  if (j < 0 || j >= draws.d)
    throw RangeError("margin " + std::to_string(j + 1) + " outside 1.." + std::to_string(draws.d));
  if (draws.size() == 0) throw RangeError("no posterior draws");
}

double obs_sample(const PosteriorDraws& draws, int r, int j, double v, double w) {
  const auto spec = CopulaSpec::auto_rotated(draws.m_obs[r][j], draws.tau_obs(r, j));
  return clamp_uniform(hinv(spec, w, v));
}

double lat_step(const PosteriorDraws& draws, int r, double v_prev, double w) {
  const auto spec = CopulaSpec::auto_rotated(draws.m_lat[r], draws.tau_lat[r]);
  return clamp_uniform(hinv(spec, w, v_prev));
}

}  // namespace

PredictiveSamples predict_insample(const PosteriorDraws& draws, int j, int t, Rng& rng) {
  check_margin(draws, j);
  if (t < 0 || t >= draws.T)
    throw RangeError("time index " + std::to_string(t + 1) + " outside the fitted range 1.." +
                     std::to_string(draws.T));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  PredictiveSamples s;
  s.margin = j;
  s.t = t;
  s.u.resize(draws.size());
  for (int r = 0; r < draws.size(); ++r) s.u[r] = obs_sample(draws, r, j, draws.v(r, t), unif(rng));
  return s;
}

PredictiveSamples predict_oos(const PosteriorDraws& draws, int j, int t, Rng& rng) {
  check_margin(draws, j);
  if (t < draws.T)
    throw RangeError("forecast time " + std::to_string(t + 1) + " must exceed the fitted range (horizon >= 1)");
  const int h = t - draws.T + 1;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  PredictiveSamples s;
  s.margin = j;
  s.t = t;
  s.u.resize(draws.size());
  for (int r = 0; r < draws.size(); ++r) {
    double v = draws.v(r, draws.T - 1);
    for (int k = 0; k < h; ++k) v = lat_step(draws, r, v, unif(rng));
    s.u[r] = obs_sample(draws, r, j, v, unif(rng));
  }
  return s;
}

std::vector<std::vector<PredictiveSamples>> predict_horizon(const PosteriorDraws& draws, int horizon, Rng& rng) {
  if (horizon < 1) throw RangeError("forecast horizon must be >= 1");
  check_margin(draws, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<PredictiveSamples>> out(horizon, std::vector<PredictiveSamples>(draws.d));
  for (int h = 0; h < horizon; ++h)
    for (int j = 0; j < draws.d; ++j) {
      out[h][j].margin = j;
      out[h][j].t = draws.T + h;
      out[h][j].u.resize(draws.size());
    }
  for (int r = 0; r < draws.size(); ++r) {
    double v = draws.v(r, draws.T - 1);
    for (int h = 0; h < horizon; ++h) {
      v = lat_step(draws, r, v, unif(rng));
      for (int j = 0; j < draws.d; ++j) out[h][j].u[r] = obs_sample(draws, r, j, v, unif(rng));
    }
  }
  return out;
}

Eigen::VectorXd to_data_scale(const PredictiveSamples& samples, const MarginalModel& marg,
                              const Eigen::VectorXd& x_row) {
  const double f = marg.fitted_at(x_row);
  Eigen::VectorXd y(samples.u.size());
  for (Eigen::Index r = 0; r < samples.u.size(); ++r) {
    const double u = samples.u[r];
    if (!(u > 0.0 && u < 1.0)) throw DomainError("sample " + std::to_string(r) + " is outside (0, 1)");
    const double z = f + marg.sigma * normal_quantile(u);
    try {
      y[r] = inv_boxcox(z, marg.lambda);
    } catch (const NumericError& e) {
      throw NumericError("sample " + std::to_string(r) + " of margin " + std::to_string(samples.margin + 1) +
                             " at t=" + std::to_string(samples.t + 1) + ": " + e.what(),
                         e.residual());
    }
  }
  return y;
}

double empirical_quantile(Eigen::VectorXd values, double p) {
  if (values.size() == 0) throw DomainError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * (values.size() - 1);
  const auto i = static_cast<Eigen::Index>(std::floor(pos));
  const double frac = pos - i;
  if (i + 1 >= values.size()) return values[values.size() - 1];
  return values[i] + frac * (values[i + 1] - values[i]);
}

CredibleBand credible_band(const Eigen::VectorXd& values, double lower, double upper) {
  return {empirical_quantile(values, lower), empirical_quantile(values, 0.5), empirical_quantile(values, upper)};
}

}  // namespace cssm
