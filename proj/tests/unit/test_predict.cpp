#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cssm/distributions.hpp"
#include "cssm/errors.hpp"
#include "cssm/predict.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cssm;

namespace {

// R identical draws of the given parameters; v defaults to the stored path.
PosteriorDraws constant_draws(const ModelParams& p, int R) {
  PosteriorDraws d;
  d.T = static_cast<int>(p.v.size());
  d.d = p.d();
  d.family_set = fixture::all_families();
  d.tau_obs.resize(R, d.d);
  d.tau_lat.resize(R);
  d.v.resize(R, d.T);
  for (int r = 0; r < R; ++r) {
    d.chain.push_back(0);
    d.iteration.push_back(r);
    d.tau_obs.row(r) = p.tau_obs.transpose();
    d.tau_lat[r] = p.tau_lat;
    d.v.row(r) = p.v.transpose();
    d.m_obs.push_back(p.m_obs);
    d.m_lat.push_back(p.m_lat);
    d.log_post.push_back(0.0);
  }
  return d;
}

std::vector<double> as_vector(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

MarginalModel intercept_model(double f, double sigma, double lambda) {
  MarginalModel m;
  m.lambda = lambda;
  m.coef = Eigen::VectorXd::Constant(1, f);
  m.sigma = sigma;
  return m;
}

}  // namespace

TEST_SUITE("predict") {
  TEST_CASE("independent observation copulas give uniform predictions") {
    ModelParams p = fixture::uniform_params(2, 0.0, 0.6, FamilyKind::Gumbel);
    p.v = Eigen::Vector3d(0.1, 0.95, 0.5);
    const PosteriorDraws d = constant_draws(p, 2000);
    Rng rng(1);
    const auto s = predict_insample(d, 1, 1, rng);
    CHECK(s.u.size() == 2000);
    CHECK(s.margin == 1);
    CHECK(s.t == 1);
    CHECK(oracle::ks_uniform(as_vector(s.u)) < oracle::ks_critical_001(2000));
  }

  TEST_CASE("Gaussian in-sample prediction is the conditional normal") {
    const double rho = 0.7;
    ModelParams p = fixture::uniform_params(1, fixture::rho_to_tau(rho), 0.3, FamilyKind::Gaussian);
    p.v = Eigen::Vector2d(0.3, 0.85);
    const int R = 10000;
    const PosteriorDraws d = constant_draws(p, R);
    Rng rng(2);
    const auto s = predict_insample(d, 0, 1, rng);
    const Eigen::ArrayXd z = s.u.unaryExpr([](double u) { return normal_quantile(u); }).array();
    const double mean = z.mean(), var = (z - mean).square().sum() / (R - 1);
    const double m0 = rho * normal_quantile(0.85), v0 = 1 - rho * rho;
    CHECK(std::abs(mean - m0) < 3 * std::sqrt(v0 / R));
    CHECK(std::abs(var - v0) < 3 * v0 * std::sqrt(2.0 / (R - 1)));
  }

  TEST_CASE("in-sample index checks") {
    ModelParams p = fixture::uniform_params(2, 0.3, 0.3, FamilyKind::Gaussian);
    p.v = Eigen::Vector3d(0.2, 0.4, 0.6);
    const PosteriorDraws d = constant_draws(p, 5);
    Rng rng(3);
    CHECK_THROWS_AS(predict_insample(d, 0, 3, rng), RangeError);
    CHECK_THROWS_AS(predict_insample(d, 0, -1, rng), RangeError);
    CHECK_THROWS_AS(predict_insample(d, 2, 0, rng), RangeError);
    CHECK_THROWS_AS(predict_oos(d, 0, 2, rng), RangeError);
    CHECK_THROWS_AS(predict_oos(d, 5, 4, rng), RangeError);
    CHECK_THROWS_AS(predict_horizon(d, 0, rng), RangeError);
    CHECK_NOTHROW(predict_oos(d, 0, 3, rng));
  }

  TEST_CASE("forecasts without latent persistence are uniform") {
    ModelParams p = fixture::uniform_params(2, 0.7, 0.0, FamilyKind::Clayton);
    p.v = Eigen::Vector3d(0.2, 0.4, 0.02);
    const PosteriorDraws d = constant_draws(p, 2000);
    for (int t : {3, 7}) {
      Rng rng(4 + t);
      const auto s = predict_oos(d, 0, t, rng);
      CHECK(s.t == t);
      CHECK(oracle::ks_uniform(as_vector(s.u)) < oracle::ks_critical_001(2000));
    }
  }

  TEST_CASE("Gaussian forecasts relax to the stationary distribution") {
    const double ro = 0.8, rl = 0.7;
    ModelParams p = fixture::uniform_params(1, fixture::rho_to_tau(ro), fixture::rho_to_tau(rl), FamilyKind::Gaussian);
    p.v = Eigen::Vector2d(0.5, 0.95);
    const int R = 20000;
    const PosteriorDraws d = constant_draws(p, R);
    const double wT = normal_quantile(0.95);
    for (int h : {1, 2, 20}) {
      Rng rng(10 + h);
      const auto s = predict_oos(d, 0, 1 + h, rng);
      const Eigen::ArrayXd z = s.u.unaryExpr([](double u) { return normal_quantile(u); }).array();
      const double mean = z.mean(), var = (z - mean).square().mean();
      const double a = ro * std::pow(rl, h);
      CHECK(std::abs(mean - a * wT) < 0.03);
      CHECK(std::abs(var - (1 - a * a)) < 0.05);
    }
  }

  TEST_CASE("one-step forecast covariance with the last latent state") {
    const double ro = 0.8, rl = 0.7;
    ModelParams p = fixture::uniform_params(1, fixture::rho_to_tau(ro), fixture::rho_to_tau(rl), FamilyKind::Gaussian);
    p.v = Eigen::Vector2d(0.5, 0.5);
    const int R = 20000;
    PosteriorDraws d = constant_draws(p, R);
    Rng vr(20);
    std::normal_distribution<double> n01;
    Eigen::VectorXd w(R);
    for (int r = 0; r < R; ++r) {
      w[r] = n01(vr);
      d.v(r, 1) = normal_cdf(w[r]);
    }
    Rng rng(21);
    const auto s = predict_oos(d, 0, 2, rng);
    const Eigen::VectorXd z = s.u.unaryExpr([](double u) { return normal_quantile(u); });
    const double cov = ((z.array() - z.mean()) * (w.array() - w.mean())).mean();
    // Sigma entry between Z_{T+1} and W_T
    const Eigen::MatrixXd sigma = oracle::gaussian_ssm_cov(Eigen::VectorXd::Constant(1, ro), rl, 2);
    CHECK(std::abs(cov - sigma(2, 1)) < 0.05);
  }

  TEST_CASE("horizon forecasts share a latent path across margins") {
    ModelParams p = fixture::uniform_params(2, 0.8, 0.8, FamilyKind::Gumbel);
    p.v = Eigen::Vector2d(0.5, 0.5);
    const PosteriorDraws d = constant_draws(p, 4000);
    Rng rng(30);
    const auto f = predict_horizon(d, 3, rng);
    REQUIRE(f.size() == 3);
    REQUIRE(f[0].size() == 2);
    CHECK(f[2][1].t == 4);
    CHECK(f[2][1].margin == 1);
    const double tau = oracle::kendall_tau_fast(as_vector(f[2][0].u), as_vector(f[2][1].u));
    CHECK(tau > 0.4);
  }

  TEST_CASE("predictions are reproducible for a fixed seed") {
    ModelParams p = fixture::uniform_params(2, 0.5, 0.5, FamilyKind::StudentT4);
    p.v = Eigen::Vector3d(0.2, 0.3, 0.9);
    const PosteriorDraws d = constant_draws(p, 100);
    Rng a(40), b(40);
    CHECK(predict_insample(d, 1, 2, a).u == predict_insample(d, 1, 2, b).u);
    CHECK(predict_oos(d, 0, 6, a).u == predict_oos(d, 0, 6, b).u);
  }

  TEST_CASE("lifting to the data scale") {
    PredictiveSamples s;
    s.u = Eigen::Vector3d(0.5, 0.1, 0.9);
    const Eigen::VectorXd none(0);
    const Eigen::VectorXd y1 = to_data_scale(s, intercept_model(2.0, 1.0, 1.0), none);
    CHECK(y1[0] == doctest::Approx(3.0).epsilon(1e-14));
    const Eigen::VectorXd y0 = to_data_scale(s, intercept_model(0.4, 0.5, 0.0), none);
    for (int r = 0; r < 3; ++r) CHECK(y0[r] == doctest::Approx(std::exp(0.4 + 0.5 * normal_quantile(s.u[r]))).epsilon(1e-14));

    PredictiveSamples sorted;
    sorted.u = Eigen::VectorXd::LinSpaced(50, 0.01, 0.99);
    for (double lambda : {-1.0, 0.0, 0.5, 2.0}) {
      const Eigen::VectorXd y = to_data_scale(sorted, intercept_model(0.2, 0.1, lambda), none);
      for (int r = 1; r < 50; ++r) CHECK(y[r] > y[r - 1]);
    }

    PredictiveSamples bad;
    bad.u = Eigen::Vector2d(0.5, 0.001);
    bad.margin = 2;
    try {
      (void)to_data_scale(bad, intercept_model(1.0, 1.0, 0.5), none);
      FAIL("expected a numeric error");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("sample 1") != std::string::npos);
    }
  }

  TEST_CASE("empirical quantiles and bands") {
    const Eigen::Vector4d x(4.0, 1.0, 3.0, 2.0);
    CHECK(empirical_quantile(x, 0.5) == doctest::Approx(2.5));
    CHECK(empirical_quantile(x, 0.0) == 1.0);
    CHECK(empirical_quantile(x, 1.0) == 4.0);
    CHECK(empirical_quantile(x, 0.05) == doctest::Approx(1.15));
    const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(101, 0.0, 100.0);
    const CredibleBand b = credible_band(g);
    CHECK(b.lower == doctest::Approx(5.0));
    CHECK(b.median == doctest::Approx(50.0));
    CHECK(b.upper == doctest::Approx(95.0));
  }

  TEST_CASE("in-sample bands cover the observed values") {
    ModelParams truth = fixture::scenario(3);
    truth.tau_obs.conservativeResize(3);
    truth.m_obs.resize(3);
    truth.m_obs[1] = FamilyKind::Gumbel;
    Rng rng(50);
    const auto sim = simulate(truth, 200, rng);
    SamplerConfig cfg;
    cfg.iterations = 1000;
    cfg.warmup = 500;
    cfg.chains = 2;
    cfg.seed = 5;
    const PosteriorDraws d = fit(sim.data, fixture::all_families(), cfg);
    int in = 0, n = 0;
    Rng prng(51);
    for (int j = 0; j < 3; ++j)
      for (int t = 0; t < 200; ++t) {
        const CredibleBand b = credible_band(predict_insample(d, j, t, prng).u);
        in += b.lower <= sim.data.u(t, j) && sim.data.u(t, j) <= b.upper;
        ++n;
      }
    MESSAGE("in-sample 90% band coverage " << static_cast<double>(in) / n);
    CHECK(in >= 0.85 * n);
  }
}
