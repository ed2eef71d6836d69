#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "cssm/errors.hpp"
#include "cssm/score.hpp"
#include "oracles.hpp"

using namespace cssm;

namespace {

double crps_brute(const std::vector<double>& x, double y) {
  const double r = static_cast<double>(x.size());
  double a = 0.0, b = 0.0;
  for (double xi : x) {
    a += std::abs(xi - y);
    for (double xj : x) b += std::abs(xi - xj);
  }
  return a / r - b / (2.0 * r * r);
}

std::vector<double> normal_sample(int n, double mu, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(mu, sigma);
  std::vector<double> x(n);
  for (double& v : x) v = d(rng);
  return x;
}

}  // namespace

TEST_SUITE("score") {
  TEST_CASE("CRPS examples") {
    const std::vector<double> same(5, 1.7);
    CHECK(crps_from_samples(same, 1.7) == 0.0);
    const std::vector<double> two{2.0, 4.0};
    CHECK(crps_from_samples(two, 3.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(crps_from_samples(std::vector<double>{}, 0.0), DomainError);
  }

  TEST_CASE("sorted estimator equals the double sum") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unif(-3, 3);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> x(1 + rep * 7);
      for (double& v : x) v = unif(rng);
      const double y = unif(rng);
      CHECK(crps_from_samples(x, y) == doctest::Approx(crps_brute(x, y)).epsilon(1e-12));
      CHECK(crps_from_samples(x, y) >= 0.0);
    }
  }

  TEST_CASE("Gaussian closed form") {
    const auto x = normal_sample(100000, 0.0, 1.0, 2);
    CHECK(std::abs(crps_from_samples(x, 0.0) - (std::sqrt(2.0) - 1.0) / std::sqrt(std::numbers::pi)) < 0.005);
    CHECK(std::abs(oracle::crps_normal(0.0, 1.0, 0.0) - (std::sqrt(2.0) - 1.0) / std::sqrt(std::numbers::pi)) < 1e-15);
    const auto s = normal_sample(100000, 1.0, 2.0, 3);
    CHECK(std::abs(crps_from_samples(s, -0.5) - oracle::crps_normal(1.0, 2.0, -0.5)) < 0.01);
  }

  TEST_CASE("translation and scale equivariance") {
    const auto x = normal_sample(1000, 0.3, 1.1, 4);
    const double base = crps_from_samples(x, 0.8);
    for (double c : {-5.0, 0.25, 3.0}) {
      std::vector<double> xs = x;
      for (double& v : xs) v += c;
      CHECK(std::abs(crps_from_samples(xs, 0.8 + c) - base) < 1e-12);
    }
    for (double a : {0.5, 2.0, 8.0}) {
      std::vector<double> xs = x;
      for (double& v : xs) v *= a;
      CHECK(std::abs(crps_from_samples(xs, 0.8 * a) - a * base) < 1e-12);
    }
  }

  TEST_CASE("estimator is consistent in the sample size") {
    for (int r : {1000, 10000}) {
      const auto a = normal_sample(r, 0.0, 1.0, 10 + r);
      const auto b = normal_sample(2 * r, 0.0, 1.0, 20 + r);
      CHECK(std::abs(crps_from_samples(a, 0.4) - crps_from_samples(b, 0.4)) < 2.0 / std::sqrt(r));
    }
  }

  TEST_CASE("cumulative scores") {
    const std::vector<EvalCell> one{{0, 5, 1.0}};
    ModelPredictions m{"copula", {}};
    m.samples[{0, 5}] = {0.0, 2.0};
    const ScoreReport r = cumulative_crps(one, {m});
    CHECK(r.cumulative(0, 0) == doctest::Approx(crps_from_samples(m.samples[{0, 5}], 1.0)));
    REQUIRE(r.cells.size() == 1);
    CHECK(r.cells[0].model == "copula");

    std::vector<EvalCell> cells;
    ModelPredictions good{"good", {}}, bad{"bad", {}};
    for (int j : {0, 2})
      for (int t = 10; t < 15; ++t) {
        cells.push_back({j, t, 0.5 * t});
        good.samples[{j, t}] = normal_sample(200, 0.5 * t, 0.5, 100 * j + t);
        bad.samples[{j, t}] = normal_sample(200, 0.5 * t + 2.0, 0.5, 100 * j + t);
      }
    const ScoreReport two = cumulative_crps(cells, {bad, good});
    CHECK(two.margins == std::vector<int>{0, 2});
    CHECK(two.best == std::vector<int>{1, 1});
    double sum = 0.0;
    for (const CellScore& c : two.cells)
      if (c.model == "bad" && c.margin == 2) sum += c.crps;
    CHECK(two.cumulative(0, 1) == doctest::Approx(sum).epsilon(1e-14));
  }

  TEST_CASE("incomplete predictions and empty cell sets are errors") {
    CHECK_THROWS_AS(cumulative_crps({}, {ModelPredictions{"a", {}}}), CompletenessError);
    ModelPredictions m{"a", {}};
    m.samples[{0, 1}] = {1.0, 2.0};
    try {
      (void)cumulative_crps({{0, 1, 1.0}, {1, 7, 2.0}}, {m});
      FAIL("expected a completeness error");
    } catch (const CompletenessError& e) {
      const std::string w = e.what();
      CHECK(w.find("model a") != std::string::npos);
      CHECK(w.find("(margin 2, t 8)") != std::string::npos);
    }
  }
}
