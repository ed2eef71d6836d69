#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "cssm/distributions.hpp"
#include "cssm/quadrature.hpp"
#include "oracles.hpp"

using namespace cssm;

TEST_SUITE("distributions") {
  TEST_CASE("normal quantile inverts the cdf") {
    for (double p : {1e-300, 1e-100, 1e-12, 1e-5, 0.01, 0.2, 0.5, 0.77, 0.99, 1 - 1e-9}) {
      const double z = normal_quantile(p);
      CHECK(normal_cdf(z) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  }

  TEST_CASE("normal log cdf is accurate deep in the lower tail") {
    CHECK(normal_logcdf(0.0) == doctest::Approx(std::log(0.5)));
    CHECK(normal_logcdf(-40.0) == doctest::Approx(-804.6084420137538).epsilon(1e-12));
    CHECK(normal_logcdf(-3.0) == doctest::Approx(std::log(oracle::Phi(-3.0))).epsilon(1e-13));
  }

  TEST_CASE("incomplete beta matches closed forms") {
    CHECK(incomplete_beta(0.3, 1.0, 1.0) == doctest::Approx(0.3));
    CHECK(incomplete_beta(0.3, 2.0, 1.0) == doctest::Approx(0.09));
    CHECK(incomplete_beta(0.3, 1.0, 3.0) == doctest::Approx(1.0 - std::pow(0.7, 3)));
    CHECK(incomplete_beta(0.0, 2.0, 3.0) == 0.0);
    CHECK(incomplete_beta(1.0, 2.0, 3.0) == 1.0);
  }

  TEST_CASE("closed-form t4 agrees with the incomplete-beta t") {
    for (double x : {-30.0, -4.0, -1.3, 0.0, 0.2, 2.5, 11.0}) {
      CHECK(t4_cdf(x) == doctest::Approx(student_t_cdf(x, 4.0)).epsilon(1e-12));
      CHECK(t4_logpdf(x) == doctest::Approx(student_t_logpdf(x, 4.0)).epsilon(1e-12));
    }
    for (double p : {1e-10, 0.01, 0.3, 0.5, 0.8, 0.999}) {
      CHECK(t4_cdf(t4_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
      CHECK(student_t_cdf(student_t_quantile(p, 5.0), 5.0) == doctest::Approx(p).epsilon(1e-10));
    }
  }

  TEST_CASE("student t density integrates to one") {
    double s = 0.0;
    const double h = 0.01;
    for (double x = -400.0; x < 400.0; x += h) s += std::exp(student_t_logpdf(x + 0.5 * h, 5.0)) * h;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
  }

  TEST_CASE("beta log density") {
    CHECK(beta_logpdf(0.5, 1.0, 1.0) == doctest::Approx(0.0));
    CHECK(beta_logpdf(0.25, 2.0, 1.0) == doctest::Approx(std::log(0.5)));
    CHECK(beta_logpdf(0.0, 10.0, 1.5) == -std::numeric_limits<double>::infinity());
  }

  TEST_CASE("log-sum-exp is shift stable") {
    const std::vector<double> a{-1000.0, -1000.0};
    CHECK(log_sum_exp(a) == doctest::Approx(-1000.0 + std::log(2.0)));
    const std::vector<double> b{1.0, 2.0, 3.0};
    CHECK(log_sum_exp(b) == doctest::Approx(std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0))));
  }

  TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
    const auto r = gauss_legendre(64, 0.0, 2.0);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], 9);
    CHECK(s == doctest::Approx(102.4).epsilon(1e-13));
  }

  TEST_CASE("Gauss-Hermite rule has standard normal moments") {
    const auto r = gauss_hermite_normal(30);
    double m0 = 0.0, m2 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      m0 += r.weights[i];
      m2 += r.weights[i] * r.nodes[i] * r.nodes[i];
      m4 += r.weights[i] * std::pow(r.nodes[i], 4);
    }
    CHECK(m0 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
  }
}
