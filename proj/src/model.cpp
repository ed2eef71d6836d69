#include "cssm/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cssm/distributions.hpp"
#include "cssm/errors.hpp"
#include "cssm/quadrature.hpp"

namespace cssm {

using detail::ArgCache;

// ---------------------------------------------------------------------------
// Data and parameters

CopulaScaleData CopulaScaleData::fully_observed(Eigen::MatrixXd u) {
  CopulaScaleData data;
  data.observed = Mask::Constant(u.rows(), u.cols(), true);
  data.u = std::move(u);
  return data;
}

void CopulaScaleData::validate() const {
  if (observed.rows() != u.rows() || observed.cols() != u.cols())
    throw DomainError("copula data: mask shape differs from data shape");
  for (int t = 0; t < T(); ++t)
    for (int j = 0; j < d(); ++j)
      if (observed(t, j) && !(u(t, j) > 0.0 && u(t, j) < 1.0))
        throw DomainError("copula data: observed cell (" + std::to_string(t + 1) + ", " +
                          std::to_string(j + 1) + ") outside (0, 1)");
}

CopulaScaleData CopulaScaleData::without_margin(int j) const {
  CopulaScaleData out = *this;
  out.observed.col(j).setConstant(false);
  return out;
}

void ModelParams::validate() const {
  if (static_cast<int>(m_obs.size()) != d())
    throw DomainError("model params: family vector length differs from tau_obs length");
  auto check = [](double tau, const std::string& name) {
    if (!std::isfinite(tau) || std::abs(tau) >= 1.0 - kTauGuard)
      throw DomainError(name + "=" + std::to_string(tau) + " outside (-1, 1)");
  };
  for (int j = 0; j < d(); ++j) check(tau_obs[j], "tau_obs_" + std::to_string(j + 1));
  check(tau_lat, "tau_lat");
}

// ---------------------------------------------------------------------------
// Densities

double loglik_obs(const CopulaScaleData& data, const ModelParams& params) {
  params.validate();
  if (params.d() != data.d()) throw DomainError("loglik_obs: margin count mismatch");
  if (params.v.size() != data.T()) throw DomainError("loglik_obs: latent path length mismatch");
  std::vector<ArgCache> vc(data.T());
  for (int t = 0; t < data.T(); ++t) vc[t] = ArgCache::from_u(params.v[t]);
  double ll = 0.0;
  for (int j = 0; j < data.d(); ++j) {
    const auto kp = detail::make_params(params.obs_spec(j));
    double s = 0.0;
    for (int t = 0; t < data.T(); ++t) {
      if (!data.observed(t, j)) continue;
      s += detail::log_density_value(kp, ArgCache::from_u(data.u(t, j)), vc[t]);
    }
    ll += s;
  }
  return ll;
}

double latent_prior_logdensity(std::span<const double> v, double tau_lat, FamilyKind m_lat) {
  const auto spec = CopulaSpec::auto_rotated(m_lat, tau_lat);
  if (v.size() < 2) return 0.0;
  const auto kp = detail::make_params(spec);
  double s = 0.0;
  ArgCache prev = ArgCache::from_u(v[0]);
  for (std::size_t t = 1; t < v.size(); ++t) {
    ArgCache cur = ArgCache::from_u(v[t]);
    s += detail::log_density_value(kp, cur, prev);
    prev = cur;
  }
  return s;
}

double log_posterior(const CopulaScaleData& data, const ModelParams& params) {
  if (params.d() < 1 || !(params.tau_obs[0] > 0.0))
    throw DomainError("log_posterior: tau_obs_1 must be positive");
  return loglik_obs(data, params) +
         latent_prior_logdensity(std::span<const double>(params.v.data(), params.v.size()),
                                 params.tau_lat, params.m_lat) +
         beta_logpdf(params.tau_obs[0], kPriorBetaA, kPriorBetaB);
}

// ---------------------------------------------------------------------------
// Reparametrization

namespace {

constexpr double kTauScale = 1.0 - 2.0 * kTauGuard;

double logistic(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// log(1 - tanh(x)^2) = 2 (log 2 - |x| - log1p(exp(-2|x|)))
double log_sech2(double x) {
  const double a = std::abs(x);
  return 2.0 * (std::log(2.0) - a - std::log1p(std::exp(-2.0 * a)));
}

// log(logistic(x) (1 - logistic(x)))
double log_logistic_deriv(double x) {
  const double a = std::abs(x);
  return -a - 2.0 * std::log1p(std::exp(-a));
}

}  // namespace

double Reparametrization::tau_first(double eta) const { return kTauScale * logistic(eta); }
double Reparametrization::tau_other(double eta) const { return kTauScale * std::tanh(eta); }
double Reparametrization::dtau_first(double eta) const {
  return kTauScale * std::exp(log_logistic_deriv(eta));
}
double Reparametrization::dtau_other(double eta) const { return kTauScale * std::exp(log_sech2(eta)); }

ContinuousParams Reparametrization::constrain(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw DomainError("constrain: wrong vector length");
  ContinuousParams p;
  p.v.resize(T_);
  for (int t = 0; t < T_; ++t) p.v[t] = normal_cdf(x[t]);
  p.tau_obs.resize(d_);
  p.tau_obs[0] = tau_first(x[T_]);
  for (int j = 1; j < d_; ++j) p.tau_obs[j] = tau_other(x[T_ + j]);
  p.tau_lat = tau_other(x[T_ + d_]);
  return p;
}

Eigen::VectorXd Reparametrization::unconstrain(const ContinuousParams& p) const {
  if (p.v.size() != T_ || p.tau_obs.size() != d_) throw DomainError("unconstrain: wrong lengths");
  Eigen::VectorXd x(dim());
  for (int t = 0; t < T_; ++t) x[t] = normal_quantile(p.v[t]);
  const double r1 = p.tau_obs[0] / kTauScale;
  if (!(r1 > 0.0 && r1 < 1.0)) throw DomainError("unconstrain: tau_obs_1 outside (0, 1)");
  x[T_] = std::log(r1) - std::log1p(-r1);
  for (int j = 1; j < d_; ++j) {
    const double r = p.tau_obs[j] / kTauScale;
    if (!(std::abs(r) < 1.0)) throw DomainError("unconstrain: tau outside (-1, 1)");
    x[T_ + j] = std::atanh(r);
  }
  const double rl = p.tau_lat / kTauScale;
  if (!(std::abs(rl) < 1.0)) throw DomainError("unconstrain: tau_lat outside (-1, 1)");
  x[T_ + d_] = std::atanh(rl);
  return x;
}

double Reparametrization::log_jacobian(const Eigen::VectorXd& x) const {
  double lj = 0.0;
  for (int t = 0; t < T_; ++t) lj += normal_logpdf(x[t]);
  lj += std::log(kTauScale) + log_logistic_deriv(x[T_]);
  for (int j = 1; j <= d_; ++j) lj += std::log(kTauScale) + log_sech2(x[T_ + j]);
  return lj;
}

// ---------------------------------------------------------------------------
// Family-marginalized posterior

MarginalizedPosterior::MarginalizedPosterior(const CopulaScaleData& data,
                                             std::vector<FamilyKind> family_set)
    : reparam_(data.T(), data.d()), families_(std::move(family_set)) {
  if (families_.empty()) throw DomainError("family set must not be empty");
  if (data.T() < 1 || data.d() < 1) throw DomainError("copula data must be nonempty");
  data.validate();
  cells_.resize(data.d());
  for (int j = 0; j < data.d(); ++j)
    for (int t = 0; t < data.T(); ++t)
      if (data.observed(t, j)) cells_[j].push_back({t, ArgCache::from_u(data.u(t, j))});
}

double MarginalizedPosterior::value(const Eigen::VectorXd& x) const { return evaluate<false>(x, nullptr); }

double MarginalizedPosterior::value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  grad.setZero(dim());
  return evaluate<true>(x, &grad);
}

template <bool Grad>
double MarginalizedPosterior::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
  const int T = reparam_.T();
  const int d = reparam_.d();
  const int nm = static_cast<int>(families_.size());
  if (x.size() != dim()) throw DomainError("marginalized posterior: wrong vector length");
  if (!x.allFinite()) throw DomainError("marginalized posterior: non-finite parameter");

  std::vector<ArgCache> vc(T);
  for (int t = 0; t < T; ++t) vc[t] = ArgCache::from_normal_score(x[t]);

  // d log post / d v_t accumulated here, mapped to w_t at the end.
  std::vector<double> dv(Grad ? T : 0, 0.0);
  std::vector<double> sums(nm), dtau(nm);
  std::vector<double> gbuf;

  double total = 0.0;
  for (int j = 0; j < d; ++j) {
    const double tau = j == 0 ? reparam_.tau_first(x[T]) : reparam_.tau_other(x[T + j]);
    const auto& cells = cells_[j];
    const std::size_t n = cells.size();
    if constexpr (Grad) gbuf.assign(static_cast<std::size_t>(nm) * n, 0.0);
    for (int m = 0; m < nm; ++m) {
      const auto kp = detail::make_params(families_[m], tau);
      double s = 0.0, st = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& c = cells[i];
        if constexpr (Grad) {
          const auto tm = detail::log_density(kp, c.cache, vc[c.t]);
          s += tm.value;
          st += tm.d_tau;
          gbuf[m * n + i] = tm.d_b;
        } else {
          s += detail::log_density_value(kp, c.cache, vc[c.t]);
        }
      }
      sums[m] = s;
      dtau[m] = st;
    }
    const double lse = log_sum_exp(sums);
    total += lse;
    if constexpr (Grad) {
      double gt = 0.0;
      for (int m = 0; m < nm; ++m) {
        const double wm = std::exp(sums[m] - lse);
        if (wm == 0.0) continue;
        gt += wm * dtau[m];
        for (std::size_t i = 0; i < n; ++i) dv[cells[i].t] += wm * gbuf[m * n + i];
      }
      const double dt = j == 0 ? reparam_.dtau_first(x[T]) : reparam_.dtau_other(x[T + j]);
      (*grad)[T + j] += gt * dt;
    }
  }

  // Latent D-vine term.
  if (T >= 2) {
    const double tau = reparam_.tau_other(x[T + d]);
    if constexpr (Grad) gbuf.assign(static_cast<std::size_t>(nm) * 2 * (T - 1), 0.0);
    for (int m = 0; m < nm; ++m) {
      const auto kp = detail::make_params(families_[m], tau);
      double s = 0.0, st = 0.0;
      for (int t = 1; t < T; ++t) {
        if constexpr (Grad) {
          const auto tm = detail::log_density(kp, vc[t], vc[t - 1]);
          s += tm.value;
          st += tm.d_tau;
          gbuf[m * 2 * (T - 1) + 2 * (t - 1)] = tm.d_a;
          gbuf[m * 2 * (T - 1) + 2 * (t - 1) + 1] = tm.d_b;
        } else {
          s += detail::log_density_value(kp, vc[t], vc[t - 1]);
        }
      }
      sums[m] = s;
      dtau[m] = st;
    }
    const double lse = log_sum_exp(sums);
    total += lse;
    if constexpr (Grad) {
      double gt = 0.0;
      for (int m = 0; m < nm; ++m) {
        const double wm = std::exp(sums[m] - lse);
        if (wm == 0.0) continue;
        gt += wm * dtau[m];
        const double* g = gbuf.data() + m * 2 * (T - 1);
        for (int t = 1; t < T; ++t) {
          dv[t] += wm * g[2 * (t - 1)];
          dv[t - 1] += wm * g[2 * (t - 1) + 1];
        }
      }
      (*grad)[T + d] += gt * reparam_.dtau_other(x[T + d]);
    }
  }

  // Beta prior on tau_obs,1.
  const double tau1 = reparam_.tau_first(x[T]);
  total += beta_logpdf(tau1, kPriorBetaA, kPriorBetaB);
  total += reparam_.log_jacobian(x);
  if constexpr (Grad) {
    const double dlp = (kPriorBetaA - 1.0) / tau1 - (kPriorBetaB - 1.0) / (1.0 - tau1);
    (*grad)[T] += dlp * reparam_.dtau_first(x[T]);
    // Jacobian terms.
    const double e1 = x[T];
    (*grad)[T] += -std::tanh(0.5 * e1);  // d/d eta log(s(1-s)) = 1 - 2 s
    for (int j = 1; j <= d; ++j) (*grad)[T + j] += -2.0 * std::tanh(x[T + j]);
    for (int t = 0; t < T; ++t) {
      const double dvdw = vc[t].clamped ? 0.0 : std::exp(vc[t].logphi_z);
      (*grad)[t] += dv[t] * dvdw - x[t];
    }
  }
  return total;
}

double log_posterior_marginalized(const CopulaScaleData& data, const Eigen::VectorXd& x,
                                  const std::vector<FamilyKind>& family_set, Eigen::VectorXd& grad) {
  return MarginalizedPosterior(data, family_set).value_and_gradient(x, grad);
}

// ---------------------------------------------------------------------------
// Family full conditionals

namespace {

std::vector<double> normalize_log(const std::vector<double>& logs) {
  const double lse = log_sum_exp(logs);
  std::vector<double> p(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) p[i] = std::exp(logs[i] - lse);
  return p;
}

}  // namespace

FamilyProbabilities gibbs_family_probs(const CopulaScaleData& data, const ModelParams& params,
                                       const std::vector<FamilyKind>& family_set) {
  if (family_set.empty()) throw DomainError("family set must not be empty");
  params.validate();
  const int T = data.T();
  std::vector<ArgCache> vc(T);
  for (int t = 0; t < T; ++t) vc[t] = ArgCache::from_u(params.v[t]);
  FamilyProbabilities out;
  std::vector<double> logs(family_set.size());
  for (int j = 0; j < data.d(); ++j) {
    std::vector<ArgCache> uc;
    std::vector<int> ts;
    for (int t = 0; t < T; ++t)
      if (data.observed(t, j)) {
        uc.push_back(ArgCache::from_u(data.u(t, j)));
        ts.push_back(t);
      }
    for (std::size_t m = 0; m < family_set.size(); ++m) {
      const auto kp = detail::make_params(family_set[m], params.tau_obs[j]);
      double s = 0.0;
      for (std::size_t i = 0; i < uc.size(); ++i) s += detail::log_density_value(kp, uc[i], vc[ts[i]]);
      logs[m] = s;
    }
    out.obs.push_back(normalize_log(logs));
  }
  for (std::size_t m = 0; m < family_set.size(); ++m) {
    const auto kp = detail::make_params(family_set[m], params.tau_lat);
    double s = 0.0;
    for (int t = 1; t < T; ++t) s += detail::log_density_value(kp, vc[t], vc[t - 1]);
    logs[m] = s;
  }
  out.lat = normalize_log(logs);
  return out;
}

// ---------------------------------------------------------------------------
// Simulation

SimulationResult simulate(const ModelParams& params, int T, Rng& rng) {
  params.validate();
  if (T < 1) throw DomainError("simulate: T must be >= 1");
  const int d = params.d();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto lat = params.lat_spec();
  std::vector<CopulaSpec> obs;
  for (int j = 0; j < d; ++j) obs.push_back(params.obs_spec(j));

  SimulationResult out;
  out.v.resize(T);
  Eigen::MatrixXd u(T, d);
  for (int t = 0; t < T; ++t) {
    out.v[t] = t == 0 ? clamp_uniform(unif(rng)) : hinv(lat, unif(rng), out.v[t - 1]);
    for (int j = 0; j < d; ++j) u(t, j) = hinv(obs[j], unif(rng), out.v[t]);
  }
  out.data = CopulaScaleData::fully_observed(std::move(u));
  return out;
}

// ---------------------------------------------------------------------------
// Bivariate margins by quadrature over the latent normal score

namespace {

struct LatentGrid {
  std::vector<ArgCache> caches;
  std::vector<double> weights;  // include phi(w)
};

LatentGrid latent_grid(const MarginQuadrature& q) {
  if (q.nodes < 2 || !(q.normal_range > 0.0)) throw DomainError("invalid margin quadrature settings");
  const auto rule = gauss_legendre(q.nodes, -q.normal_range, q.normal_range);
  LatentGrid g;
  for (int i = 0; i < q.nodes; ++i) {
    g.caches.push_back(ArgCache::from_normal_score(rule.nodes[i]));
    g.weights.push_back(rule.weights[i] * normal_pdf(rule.nodes[i]));
  }
  return g;
}

}  // namespace

double bivariate_margin_density_crosssection(int j, int j2, const ModelParams& params, double u,
                                             double u2, const MarginQuadrature& q) {
  params.validate();
  if (j < 0 || j >= params.d() || j2 < 0 || j2 >= params.d())
    throw RangeError("margin index out of range");
  const auto g = latent_grid(q);
  const auto k1 = detail::make_params(params.obs_spec(j));
  const auto k2 = detail::make_params(params.obs_spec(j2));
  const auto a = ArgCache::from_u(u);
  const auto b = ArgCache::from_u(u2);
  double s = 0.0;
  for (std::size_t i = 0; i < g.caches.size(); ++i) {
    s += g.weights[i] * std::exp(detail::log_density_value(k1, a, g.caches[i]) +
                                 detail::log_density_value(k2, b, g.caches[i]));
  }
  return s;
}

double bivariate_margin_density_temporal(int j, const ModelParams& params, double u, double u_prev,
                                         const MarginQuadrature& q) {
  params.validate();
  if (j < 0 || j >= params.d()) throw RangeError("margin index out of range");
  const auto g = latent_grid(q);
  const auto ko = detail::make_params(params.obs_spec(j));
  const auto kl = detail::make_params(params.lat_spec());
  const auto a = ArgCache::from_u(u);
  const auto b = ArgCache::from_u(u_prev);
  const std::size_t n = g.caches.size();
  std::vector<double> la(n), lb(n);
  for (std::size_t i = 0; i < n; ++i) {
    la[i] = detail::log_density_value(ko, a, g.caches[i]);
    lb[i] = detail::log_density_value(ko, b, g.caches[i]);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)      // v_t
    for (std::size_t k = 0; k < n; ++k) {  // v_{t-1}
      s += g.weights[i] * g.weights[k] *
           std::exp(la[i] + lb[k] + detail::log_density_value(kl, g.caches[i], g.caches[k]));
    }
  return s;
}

Eigen::MatrixXd bivariate_margin_density_crosssection_grid(int j, int j2, const ModelParams& params,
                                                           const Eigen::VectorXd& grid,
                                                           const MarginQuadrature& q) {
  params.validate();
  if (j < 0 || j >= params.d() || j2 < 0 || j2 >= params.d())
    throw RangeError("margin index out of range");
  const auto g = latent_grid(q);
  const auto k1 = detail::make_params(params.obs_spec(j));
  const auto k2 = detail::make_params(params.obs_spec(j2));
  const auto n = static_cast<Eigen::Index>(g.caches.size());
  const Eigen::Index m = grid.size();
  Eigen::MatrixXd d1(m, n), d2(m, n);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto c = ArgCache::from_u(grid[a]);
    for (Eigen::Index i = 0; i < n; ++i) {
      d1(a, i) = std::exp(detail::log_density_value(k1, c, g.caches[i])) * g.weights[i];
      d2(a, i) = std::exp(detail::log_density_value(k2, c, g.caches[i]));
    }
  }
  return d1 * d2.transpose();
}

Eigen::MatrixXd bivariate_margin_density_temporal_grid(int j, const ModelParams& params,
                                                       const Eigen::VectorXd& grid,
                                                       const MarginQuadrature& q) {
  params.validate();
  if (j < 0 || j >= params.d()) throw RangeError("margin index out of range");
  const auto g = latent_grid(q);
  const auto ko = detail::make_params(params.obs_spec(j));
  const auto kl = detail::make_params(params.lat_spec());
  const auto n = static_cast<Eigen::Index>(g.caches.size());
  const Eigen::Index m = grid.size();
  Eigen::MatrixXd obs(m, n), lat(n, n);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto c = ArgCache::from_u(grid[a]);
    for (Eigen::Index i = 0; i < n; ++i) obs(a, i) = std::exp(detail::log_density_value(ko, c, g.caches[i]));
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      lat(i, k) = g.weights[i] * g.weights[k] * std::exp(detail::log_density_value(kl, g.caches[i], g.caches[k]));
  // rows: u at v_t (index i); columns: u_prev at v_{t-1} (index k)
  return obs * lat * obs.transpose();
}

}  // namespace cssm
