#pragma once

// Per-margin Box-Cox regression and probability integral transform.

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace cssm {

double boxcox(double y, double lambda);
/// Inverse transform; throws NumericError when 1 + lambda * z <= 0 (lambda != 0).
double inv_boxcox(double z, double lambda);

enum class CovariateKind { Spline, Linear, Categorical };

struct CovariateSpec {
  std::string name;
  CovariateKind kind = CovariateKind::Spline;
};

/// Fitted basis for one covariate.
struct BasisTerm {
  std::string name;
  CovariateKind kind = CovariateKind::Spline;
  std::vector<double> knots;   // full cubic knot vector (boundary knots repeated 4 times)
  std::vector<double> levels;  // categorical levels; the first is the reference

  int columns() const;
  /// Appends this term's columns for value x to row (at offset).
  void evaluate(double x, double* row) const;
};

struct MarginOptions {
  double lambda_min = -2.0;
  double lambda_max = 2.0;
  double lambda_step = 0.05;
  int min_observed = 50;
  int interior_knots = 10;
  double ridge = 1e-6;

  void validate() const;
  std::vector<double> lambda_grid() const;
};

struct MarginalModel {
  double lambda = 1.0;
  std::vector<BasisTerm> basis;
  Eigen::VectorXd coef;  // intercept first
  double sigma = 1.0;
  double loglik = 0.0;

  int columns() const;
  Eigen::MatrixXd design(const Eigen::MatrixXd& x) const;
  /// f(x) on the Box-Cox scale for each row of x.
  Eigen::VectorXd fitted(const Eigen::MatrixXd& x) const;
  double fitted_at(const Eigen::VectorXd& x_row) const;
};

/// y: length-n series, NaN marks missing. x: n x p covariates matching specs.
MarginalModel fit_margin(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                         const std::vector<CovariateSpec>& specs, const MarginOptions& opts = {});

/// Standardized residuals mapped through Phi; missing y stays NaN.
Eigen::VectorXd residuals_to_copula(const MarginalModel& model, const Eigen::VectorXd& y,
                                    const Eigen::MatrixXd& x);

/// y = invBC(f(x) + sigma * Phi^{-1}(u)).
double margin_to_data_scale(const MarginalModel& model, double u, const Eigen::VectorXd& x_row);

void write_margin(std::ostream& os, const MarginalModel& model);
MarginalModel read_margin(std::istream& is);

}  // namespace cssm
