#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "cssm/distributions.hpp"
#include "cssm/errors.hpp"
#include "cssm/model.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cssm;

namespace {

CopulaScaleData random_copula_data(std::mt19937_64& rng, int T, int d, double miss_rate = 0.0) {
  std::uniform_real_distribution<double> unif(0.01, 0.99);
  std::bernoulli_distribution miss(miss_rate);
  CopulaScaleData data;
  data.u.resize(T, d);
  data.observed.resize(T, d);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < d; ++j) {
      data.u(t, j) = unif(rng);
      data.observed(t, j) = !miss(rng);
    }
  return data;
}

ModelParams random_params(std::mt19937_64& rng, int T, int d, const std::vector<FamilyKind>& kinds) {
  std::uniform_real_distribution<double> unif(0.02, 0.98), tau(-0.8, 0.8), tau1(0.1, 0.9);
  std::uniform_int_distribution<std::size_t> pick(0, kinds.size() - 1);
  ModelParams p;
  p.v.resize(T);
  for (int t = 0; t < T; ++t) p.v[t] = unif(rng);
  p.tau_obs.resize(d);
  for (int j = 0; j < d; ++j) p.tau_obs[j] = j == 0 ? tau1(rng) : tau(rng);
  p.tau_lat = tau(rng);
  for (int j = 0; j < d; ++j) p.m_obs.push_back(kinds[pick(rng)]);
  p.m_lat = kinds[pick(rng)];
  return p;
}

double by_hand_loglik(const CopulaScaleData& data, const ModelParams& p, int only = -1) {
  double s = 0.0;
  for (int j = 0; j < data.d(); ++j) {
    if (only >= 0 && j != only) continue;
    for (int t = 0; t < data.T(); ++t)
      if (data.observed(t, j)) s += std::log(density(p.obs_spec(j), data.u(t, j), p.v[t]));
  }
  return s;
}

double prior_v(const ModelParams& p) {
  return latent_prior_logdensity({p.v.data(), static_cast<std::size_t>(p.v.size())}, p.tau_lat, p.m_lat);
}

double quantile(double p) {
  double lo = -40, hi = 40;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (oracle::Phi(m) < p ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}

double gaussian_copula_density(double rho, double u, double v) {
  const double x = quantile(u), y = quantile(v);
  const double q = (x * x - 2 * rho * x * y + y * y) / (1 - rho * rho) - x * x - y * y;
  return std::exp(-0.5 * q) / std::sqrt(1 - rho * rho);
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("observation likelihood examples") {
    std::mt19937_64 rng(1);
    CopulaScaleData data = random_copula_data(rng, 5, 3);
    ModelParams p = random_params(rng, 5, 3, fixture::all_families());
    data.observed.setConstant(false);
    CHECK(loglik_obs(data, p) == 0.0);

    // tau = 0 is independence for every family except t4, whose rho = 0 copula keeps tail dependence
    data.observed.setConstant(true);
    p.tau_obs.setZero();
    for (auto& m : p.m_obs)
      if (m == FamilyKind::StudentT4) m = FamilyKind::Gumbel;
    CHECK(loglik_obs(data, p) == doctest::Approx(0.0).epsilon(1e-14));

    CopulaScaleData one = CopulaScaleData::fully_observed(Eigen::MatrixXd::Constant(2, 1, 0.5));
    ModelParams g = fixture::uniform_params(1, fixture::rho_to_tau(0.6), 0.3, FamilyKind::Gaussian);
    g.v = Eigen::VectorXd::Constant(2, 0.5);
    CHECK(loglik_obs(one, g) == doctest::Approx(2.0 * std::log(1.25)).epsilon(1e-13));

    g.tau_obs[0] = 1.2;
    CHECK_THROWS_AS(loglik_obs(one, g), DomainError);
  }

  TEST_CASE("observation likelihood is the sum of observed cell log densities") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 20; ++rep) {
      const CopulaScaleData data = random_copula_data(rng, 7, 3, 0.3);
      const ModelParams p = random_params(rng, 7, 3, fixture::all_families());
      CHECK(loglik_obs(data, p) == doctest::Approx(by_hand_loglik(data, p)).epsilon(1e-12));
    }
  }

  TEST_CASE("deleting a margin removes exactly its summand") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 10; ++rep) {
      const CopulaScaleData data = random_copula_data(rng, 9, 4, 0.2);
      const ModelParams p = random_params(rng, 9, 4, fixture::all_families());
      for (int j = 0; j < 4; ++j) {
        const double drop = loglik_obs(data, p) - loglik_obs(data.without_margin(j), p);
        CHECK(drop == doctest::Approx(by_hand_loglik(data, p, j)).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("masked cells do not contribute whatever their stored values") {
    std::mt19937_64 rng(4);
    CopulaScaleData data = random_copula_data(rng, 8, 3, 0.4);
    const ModelParams p = random_params(rng, 8, 3, fixture::all_families());
    const double base = loglik_obs(data, p);
    for (int t = 0; t < 8; ++t)
      for (int j = 0; j < 3; ++j)
        if (!data.observed(t, j)) data.u(t, j) = std::nan("");
    CHECK(loglik_obs(data, p) == base);
    CHECK_NOTHROW(data.validate());
    data.u(0, 0) = 1.0;
    data.observed(0, 0) = true;
    CHECK_THROWS_AS(data.validate(), DomainError);
  }

  TEST_CASE("latent prior examples") {
    const Eigen::VectorXd v = (Eigen::VectorXd(4) << 0.2, 0.9, 0.4, 0.55).finished();
    const std::span<const double> sv(v.data(), 4);
    for (FamilyKind k : {FamilyKind::Gaussian, FamilyKind::Clayton, FamilyKind::Gumbel})
      CHECK(latent_prior_logdensity(sv, 0.0, k) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(latent_prior_logdensity(sv, 0.0, FamilyKind::StudentT4) != doctest::Approx(0.0));
    CHECK(latent_prior_logdensity(sv.first(1), 0.6, FamilyKind::Gumbel) == 0.0);
  }

  TEST_CASE("Gaussian latent prior is an AR(1) in normal scores") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    for (int rep = 0; rep < 10; ++rep) {
      const int T = 2 + rep % 5;
      const double rho = -0.9 + 0.18 * rep;
      Eigen::VectorXd w(T), v(T);
      for (int t = 0; t < T; ++t) {
        w[t] = n01(rng);
        v[t] = normal_cdf(w[t]);
      }
      Eigen::MatrixXd cov(T, T);
      for (int a = 0; a < T; ++a)
        for (int b = 0; b < T; ++b) cov(a, b) = std::pow(rho, std::abs(a - b));
      double ref = oracle::mvn_logpdf(cov, w);
      for (int t = 0; t < T; ++t) ref -= std::log(oracle::phi(w[t]));
      CHECK(std::abs(latent_prior_logdensity({v.data(), static_cast<std::size_t>(T)}, fixture::rho_to_tau(rho), FamilyKind::Gaussian) - ref) < 1e-9);
    }
  }

  TEST_CASE("log posterior is the sum of its parts") {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 10; ++rep) {
      const CopulaScaleData data = random_copula_data(rng, 6, 2, 0.1);
      const ModelParams p = random_params(rng, 6, 2, fixture::all_families());
      const double lp = log_posterior(data, p);
      CHECK(lp == doctest::Approx(loglik_obs(data, p) + prior_v(p) + beta_logpdf(p.tau_obs[0], 10.0, 1.5)).epsilon(1e-12));
    }
  }

  TEST_CASE("log posterior of a hand-checked instance") {
    CopulaScaleData data;
    data.u = (Eigen::MatrixXd(2, 2) << 0.3, 0.8, 0.6, 0.45).finished();
    data.observed = Mask::Constant(2, 2, true);
    data.observed(1, 1) = false;
    ModelParams p;
    p.v = Eigen::Vector2d(0.4, 0.7);
    p.tau_obs = Eigen::Vector2d(0.6, -0.3);
    p.tau_lat = 0.5;
    p.m_obs = {FamilyKind::Gumbel, FamilyKind::Clayton};
    p.m_lat = FamilyKind::StudentT4;
    const CopulaSpec g({FamilyKind::Gumbel}, 0.6), c({FamilyKind::Clayton, Rotation::R90}, -0.3),
        l({FamilyKind::StudentT4}, 0.5);
    const double log_beta = std::lgamma(11.5) - std::lgamma(10.0) - std::lgamma(1.5) + 9.0 * std::log(0.6) + 0.5 * std::log(0.4);
    const double expect = std::log(density(g, 0.3, 0.4)) + std::log(density(g, 0.6, 0.7)) +
                          std::log(density(c, 0.8, 0.4)) + std::log(density(l, 0.7, 0.4)) + log_beta;
    CHECK(log_posterior(data, p) == doctest::Approx(expect).epsilon(1e-12));
  }

  TEST_CASE("log posterior falls as tau_obs_1 approaches zero") {
    std::mt19937_64 rng(7);
    const CopulaScaleData data = random_copula_data(rng, 3, 1);
    ModelParams p = random_params(rng, 3, 1, {FamilyKind::Gaussian});
    double prev = INFINITY;
    for (double t : {0.3, 0.1, 1e-2, 1e-4, 1e-8}) {
      p.tau_obs[0] = t;
      const double lp = log_posterior(data, p);
      CHECK(lp < prev);
      prev = lp;
    }
    CHECK(prev < -150.0);
    p.tau_obs[0] = 0.0;
    CHECK_THROWS_AS(log_posterior(data, p), DomainError);
    p.tau_obs[0] = -0.2;
    CHECK_THROWS_AS(log_posterior(data, p), DomainError);
  }

  TEST_CASE("reparametrization round trip and log Jacobian") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n01;
    const Reparametrization rp(5, 3);
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::VectorXd x(rp.dim());
      // |x| <= 3.5 keeps v away from 1 - 1e-4, where a finite difference of v loses its digits
      for (int i = 0; i < rp.dim(); ++i) x[i] = std::clamp(n01(rng), -3.5, 3.5);
      const ContinuousParams c = rp.constrain(x);
      CHECK((c.v.array() > 0.0).all());
      CHECK((c.v.array() < 1.0).all());
      CHECK(c.tau_obs[0] > 0.0);
      const ContinuousParams back = rp.constrain(rp.unconstrain(c));
      CHECK((back.v - c.v).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((back.tau_obs - c.tau_obs).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(back.tau_lat - c.tau_lat) < 1e-12);

      double lj = 0.0;
      const double h = 1e-6;
      for (int i = 0; i < rp.dim(); ++i) {
        auto comp = [&](double xi) {
          Eigen::VectorXd y = x;
          y[i] = xi;
          const ContinuousParams q = rp.constrain(y);
          if (i < 5) return q.v[i];
          if (i < 8) return q.tau_obs[i - 5];
          return q.tau_lat;
        };
        lj += std::log(std::abs(oracle::central_diff(comp, x[i], h)));
      }
      CHECK(std::abs(rp.log_jacobian(x) - lj) < 1e-6);
    }
  }

  TEST_CASE("single-family marginalized posterior is the plain posterior") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n01;
    for (FamilyKind k : fixture::all_families()) {
      const CopulaScaleData data = random_copula_data(rng, 6, 3, 0.2);
      const MarginalizedPosterior post(data, {k});
      const Reparametrization& rp = post.reparam();
      Eigen::VectorXd x(rp.dim());
      for (int i = 0; i < rp.dim(); ++i) x[i] = n01(rng);
      const ContinuousParams c = rp.constrain(x);
      ModelParams p;
      p.v = c.v;
      p.tau_obs = c.tau_obs;
      p.tau_lat = c.tau_lat;
      p.m_obs.assign(3, k);
      p.m_lat = k;
      CHECK(std::abs(post.value(x) - (log_posterior(data, p) + rp.log_jacobian(x))) < 1e-10);
    }
  }

  TEST_CASE("marginalized posterior gradient matches finite differences") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> n01;
    const CopulaScaleData data = random_copula_data(rng, 8, 3, 0.15);
    const MarginalizedPosterior post(data, fixture::all_families());
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::VectorXd x(post.dim());
      for (int i = 0; i < post.dim(); ++i) x[i] = n01(rng);
      Eigen::VectorXd g;
      const double val = post.value_and_gradient(x, g);
      CHECK(val == doctest::Approx(post.value(x)).epsilon(1e-13));
      for (int i = 0; i < post.dim(); ++i) {
        const double fd = oracle::central_diff(
            [&](double xi) {
              Eigen::VectorXd y = x;
              y[i] = xi;
              return post.value(y);
            },
            x[i], 1e-5);
        CHECK(std::abs(g[i] - fd) / std::max(1.0, std::abs(fd)) < 1e-4);
      }
    }
  }

  TEST_CASE("marginalized posterior does not depend on the family order") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n01;
    const CopulaScaleData data = random_copula_data(rng, 10, 2);
    std::vector<FamilyKind> fam = fixture::all_families();
    const MarginalizedPosterior a(data, fam);
    Eigen::VectorXd x(a.dim());
    for (int i = 0; i < a.dim(); ++i) x[i] = n01(rng);
    const double ref = a.value(x);
    std::sort(fam.begin(), fam.end());
    do {
      const MarginalizedPosterior b(data, fam);
      CHECK(std::abs(b.value(x) - ref) < 1e-12);
    } while (std::next_permutation(fam.begin(), fam.end()));
    Eigen::VectorXd g;
    CHECK(log_posterior_marginalized(data, x, fixture::all_families(), g) == ref);
    CHECK(g.size() == a.dim());
  }

  TEST_CASE("family conditionals") {
    std::mt19937_64 rng(12);
    const CopulaScaleData data = random_copula_data(rng, 3, 2);
    ModelParams p = random_params(rng, 3, 2, fixture::all_families());

    const auto one = gibbs_family_probs(data, p, {FamilyKind::Clayton});
    CHECK(one.obs[0][0] == 1.0);
    CHECK(one.lat[0] == 1.0);

    ModelParams z = p;
    z.tau_obs[1] = 0.0;
    const auto flat = gibbs_family_probs(data, z, {FamilyKind::Gaussian, FamilyKind::Clayton, FamilyKind::Gumbel});
    for (double q : flat.obs[1]) CHECK(q == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const auto probs = gibbs_family_probs(data, p, fixture::all_families());
    for (int j = 0; j < 2; ++j) {
      std::vector<double> prod;
      for (FamilyKind k : fixture::all_families()) {
        const CopulaSpec s = CopulaSpec::auto_rotated(k, p.tau_obs[j]);
        double x = 1.0;
        for (int t = 0; t < 3; ++t) x *= density(s, data.u(t, j), p.v[t]);
        prod.push_back(x);
      }
      double tot = 0.0;
      for (double x : prod) tot += x;
      double sum = 0.0;
      for (std::size_t m = 0; m < prod.size(); ++m) {
        CHECK(probs.obs[j][m] == doctest::Approx(prod[m] / tot).epsilon(1e-12));
        sum += probs.obs[j][m];
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    std::vector<double> lat;
    for (FamilyKind k : fixture::all_families()) {
      const CopulaSpec s = CopulaSpec::auto_rotated(k, p.tau_lat);
      lat.push_back(density(s, p.v[1], p.v[0]) * density(s, p.v[2], p.v[1]));
    }
    double tot = 0.0;
    for (double x : lat) tot += x;
    for (std::size_t m = 0; m < lat.size(); ++m) CHECK(probs.lat[m] == doctest::Approx(lat[m] / tot).epsilon(1e-12));
  }

  TEST_CASE("simulation under independence gives uniform unrelated margins") {
    Rng rng(13);
    ModelParams p = fixture::uniform_params(3, 0.0, 0.0, FamilyKind::Clayton);
    p.tau_obs[0] = 0.0;
    const auto sim = simulate(p, 10000, rng);
    for (int j = 0; j < 3; ++j) {
      std::vector<double> col(sim.data.u.col(j).data(), sim.data.u.col(j).data() + 10000);
      CHECK(oracle::ks_uniform(col) < oracle::ks_critical_001(col.size()));
    }
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b) {
        std::vector<double> x(sim.data.u.col(a).data(), sim.data.u.col(a).data() + 10000);
        std::vector<double> y(sim.data.u.col(b).data(), sim.data.u.col(b).data() + 10000);
        CHECK(std::abs(oracle::kendall_tau_fast(x, y)) < 0.03);
      }
    CHECK(sim.data.observed.all());
  }

  TEST_CASE("simulated cross-sectional dependence matches the implied margin") {
    const ModelParams p = fixture::scenario(1);
    const auto implied = oracle::mass_and_kendall(
        [&](double a, double b) { return bivariate_margin_density_crosssection(0, 1, p, a, b); }, 200, 6.0);
    Rng rng(14);
    const int n = 4000;
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      const auto sim = simulate(p, 1, rng);
      x[i] = sim.data.u(0, 0);
      y[i] = sim.data.u(0, 1);
    }
    CHECK(std::abs(oracle::kendall_tau_fast(x, y) - implied.tau) < 0.03);
    CHECK(std::abs(implied.mass - 1.0) < 5e-3);
  }

  TEST_CASE("simulated temporal correlation in the Gaussian model") {
    const double r1 = 0.8, rl = 0.7;
    ModelParams p = fixture::uniform_params(2, fixture::rho_to_tau(r1), fixture::rho_to_tau(rl), FamilyKind::Gaussian);
    Rng rng(15);
    const int T = 20000;
    const auto sim = simulate(p, T, rng);
    double sxy = 0, sxx = 0, syy = 0, sx = 0, sy = 0;
    for (int t = 1; t < T; ++t) {
      const double a = normal_quantile(sim.data.u(t, 0)), b = normal_quantile(sim.data.u(t - 1, 0));
      sx += a;
      sy += b;
      sxy += a * b;
      sxx += a * a;
      syy += b * b;
    }
    const double n = T - 1;
    const double corr = (sxy / n - sx / n * sy / n) / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
    CHECK(std::abs(corr - r1 * r1 * rl) < 0.03);
  }

  TEST_CASE("cross-sectional margin density") {
    ModelParams p = fixture::scenario(2);
    ModelParams z = p;
    z.tau_obs[2] = 0.0;
    for (double a : {0.1, 0.5, 0.93})
      for (double b : {0.04, 0.6}) CHECK(bivariate_margin_density_crosssection(2, 4, z, a, b) == doctest::Approx(1.0).epsilon(1e-6));

    const double ra = fixture::tau_to_rho(0.5), rb = fixture::tau_to_rho(0.7);
    for (double a : {0.05, 0.3, 0.5, 0.8})
      for (double b : {0.1, 0.45, 0.97})
        CHECK(std::abs(bivariate_margin_density_crosssection(0, 1, p, a, b) - gaussian_copula_density(ra * rb, a, b)) < 1e-4);

    for (auto [j, k] : {std::pair{0, 1}, std::pair{2, 5}, std::pair{3, 4}}) {
      const int n = 200;
      Eigen::VectorXd grid(n);
      for (int i = 0; i < n; ++i) grid[i] = (i + 0.5) / n;
      const Eigen::MatrixXd dens = bivariate_margin_density_crosssection_grid(j, k, p, grid);
      CHECK(std::abs(dens.sum() / (n * n) - 1.0) < 5e-3);
      CHECK(dens(17, 123) == doctest::Approx(bivariate_margin_density_crosssection(j, k, p, grid[17], grid[123])).epsilon(1e-12));
    }
  }

  TEST_CASE("temporal margin density") {
    ModelParams p = fixture::scenario(3);
    ModelParams z = p;
    z.tau_lat = 0.0;
    for (double a : {0.1, 0.5, 0.93})
      for (double b : {0.04, 0.6}) CHECK(bivariate_margin_density_temporal(4, z, a, b) == doctest::Approx(1.0).epsilon(1e-4));

    const double r1 = 0.6, rl = 0.8;
    const ModelParams g = fixture::uniform_params(2, fixture::rho_to_tau(r1), fixture::rho_to_tau(rl), FamilyKind::Gaussian);
    for (double a : {0.05, 0.3, 0.5, 0.8})
      for (double b : {0.1, 0.45, 0.97})
        CHECK(std::abs(bivariate_margin_density_temporal(1, g, a, b) - gaussian_copula_density(r1 * r1 * rl, a, b)) < 1e-3);

    // mass on a normal-score grid, where the tail singularities at the corners are integrable
    const oracle::ZGrid zg = oracle::zgrid(200, 6.0);
    Eigen::VectorXd grid(200), w(200);
    for (int i = 0; i < 200; ++i) {
      grid[i] = oracle::Phi(zg.z[i]);
      w[i] = oracle::phi(zg.z[i]) * zg.h;
    }
    for (int j : {1, 3, 5}) {
      const Eigen::MatrixXd dens = bivariate_margin_density_temporal_grid(j, p, grid);
      CHECK(std::abs(w.dot(dens * w) - 1.0) < 5e-3);
      CHECK(dens(3, 141) == doctest::Approx(bivariate_margin_density_temporal(j, p, grid[3], grid[141])).epsilon(1e-12));
    }
  }

  TEST_CASE("parameter validation") {
    ModelParams p = fixture::scenario(1);
    p.v = Eigen::VectorXd::Constant(3, 0.5);
    CHECK_NOTHROW(p.validate());
    p.m_obs.pop_back();
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = fixture::scenario(1);
    p.tau_lat = -1.0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    CHECK_THROWS_AS(MarginalizedPosterior(CopulaScaleData::fully_observed(Eigen::MatrixXd::Constant(2, 1, 0.5)), {}), DomainError);
  }
}
