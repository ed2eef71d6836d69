#include "cssm/gauss_oracle.hpp"

#include <cmath>
#include <vector>

#include "cssm/distributions.hpp"
#include "cssm/errors.hpp"

namespace cssm {

void GaussSSMParams::validate() const {
  if (rho_obs.size() < 1) throw DomainError("need at least one observed margin");
  for (Eigen::Index j = 0; j < rho_obs.size(); ++j)
    if (!(std::abs(rho_obs[j]) < 1.0)) throw DomainError("rho_obs entries must lie in (-1, 1)");
  if (!(std::abs(rho_lat) < 1.0)) throw DomainError("rho_lat must lie in (-1, 1)");
}

Eigen::MatrixXd build_sigma(const GaussSSMParams& params, int T) {
  params.validate();
  if (T < 1) throw DomainError("build_sigma: T must be >= 1");
  const int d = static_cast<int>(params.rho_obs.size());
  const int k = d + 1;
  Eigen::VectorXd load(k);
  load.head(d) = params.rho_obs;
  load[d] = 1.0;
  Eigen::MatrixXd a = load * load.transpose();
  a.diagonal().setOnes();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k, k);
  for (int j = 0; j < d; ++j) b(j, j) = params.rho_obs[j] * params.rho_obs[j] - 1.0;
  const Eigen::MatrixXd ab = a + b;

  Eigen::MatrixXd sigma(k * T, k * T);
  for (int s = 0; s < T; ++s) {
    for (int t = 0; t < T; ++t) {
      if (s == t) {
        sigma.block(k * s, k * t, k, k) = a;
      } else {
        sigma.block(k * s, k * t, k, k) = std::pow(params.rho_lat, std::abs(s - t)) * ab;
      }
    }
  }
  return sigma;
}

double kalman_loglik(const GaussSSMParams& params, const Eigen::MatrixXd& z, const Mask& observed) {
  params.validate();
  const Eigen::Index T = z.rows();
  const Eigen::Index d = z.cols();
  if (d != params.rho_obs.size() || observed.rows() != T || observed.cols() != d)
    throw DomainError("kalman_loglik: dimension mismatch");
  const double rl = params.rho_lat;
  double mean = 0.0, var = 1.0;  // W_1 ~ N(0, 1) under stationarity
  double ll = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    if (t > 0) {
      mean = rl * mean;
      var = rl * rl * var + (1.0 - rl * rl);
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!observed(t, j)) continue;
      const double y = z(t, j);
      if (!std::isfinite(y)) throw DomainError("kalman_loglik: non-finite observation");
      const double r = params.rho_obs[j];
      const double pred_var = r * r * var + (1.0 - r * r);
      const double innov = y - r * mean;
      ll += -0.5 * std::log(pred_var) - 0.5 * innov * innov / pred_var - kLogSqrt2Pi;
      const double gain = r * var / pred_var;
      mean += gain * innov;
      var -= gain * r * var;
    }
  }
  return ll;
}

namespace {

double mvn_logpdf(const Eigen::MatrixXd& cov, const Eigen::VectorXd& x) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericError("covariance is not positive definite", 0.0);
  const Eigen::VectorXd y = llt.matrixL().solve(x);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * y.squaredNorm() - 0.5 * logdet - static_cast<double>(x.size()) * kLogSqrt2Pi;
}

}  // namespace

double dense_joint_logdensity(const GaussSSMParams& params, const Eigen::MatrixXd& z,
                              const Eigen::VectorXd& w) {
  const int T = static_cast<int>(z.rows());
  const int d = static_cast<int>(z.cols());
  const Eigen::MatrixXd sigma = build_sigma(params, T);
  Eigen::VectorXd x((d + 1) * T);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < d; ++j) x[(d + 1) * t + j] = z(t, j);
    x[(d + 1) * t + d] = w[t];
  }
  return mvn_logpdf(sigma, x);
}

double dense_observed_logdensity(const GaussSSMParams& params, const Eigen::MatrixXd& z,
                                 const Mask& observed) {
  const int T = static_cast<int>(z.rows());
  const int d = static_cast<int>(z.cols());
  const Eigen::MatrixXd sigma = build_sigma(params, T);
  std::vector<int> idx;
  std::vector<double> vals;
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < d; ++j)
      if (observed(t, j)) {
        idx.push_back((d + 1) * t + j);
        vals.push_back(z(t, j));
      }
  if (idx.empty()) return 0.0;
  const int n = static_cast<int>(idx.size());
  Eigen::MatrixXd sub(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) sub(a, b) = sigma(idx[a], idx[b]);
  return mvn_logpdf(sub, Eigen::Map<const Eigen::VectorXd>(vals.data(), n));
}

}  // namespace cssm
