#pragma once

// Univariate distribution helpers shared by the copula families, the sampler
// and the marginal models.

#include <cmath>
#include <numbers>
#include <span>

namespace cssm {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double normal_logpdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }
inline double normal_pdf(double x) { return std::exp(normal_logpdf(x)); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

/// log Phi(x), accurate deep into the lower tail.
double normal_logcdf(double x);

/// Inverse standard normal CDF (Wichura's AS241, ~1e-16 relative).
double normal_quantile(double p);

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double x, double a, double b);

double student_t_logpdf(double x, double nu);
double student_t_cdf(double x, double nu);
double student_t_quantile(double p, double nu);

// Closed forms for four degrees of freedom; the density kernels of the t
// copula use these on every evaluation.
double t4_logpdf(double x);
double t4_cdf(double x);
double t4_quantile(double p);

/// log of the Beta(a, b) density at x in (0, 1).
double beta_logpdf(double x, double a, double b);

/// Max-shifted log(sum(exp(values))). Returns -inf for an empty span.
double log_sum_exp(std::span<const double> values);

}  // namespace cssm
