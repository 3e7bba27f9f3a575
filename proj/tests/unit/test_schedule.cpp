#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bidgen/errors.hpp"
#include "bidgen/rng.hpp"
#include "bidgen/schedule.hpp"

using namespace bidgen;

TEST_CASE("raw cosine curve endpoints") {
  for (int K : {1, 5, 10, 50}) {
    for (double gamma : {0.008, 0.1, 1.0}) {
      CHECK(cosine_alpha_bar(0, K, gamma) == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(std::abs(cosine_alpha_bar(K, K, gamma)) < 1e-12);  // cos(pi/2) up to rounding
    }
  }
}

TEST_CASE("K=10 gamma=0.008 regression fixtures") {
  // Independently evaluated at 40-digit precision from the curve definition.
  const double expected[] = {
      1.0,
      0.98594763406276764,
      0.94800101297388332,
      0.88707976594601081,
      0.80466030792285505,
      0.70274005894116902,
      0.58378903703249177,
      0.45068999780152382,
      0.30666857138717987,
      0.15521508992390481,
  };
  for (int k = 0; k <= 9; ++k)
    CHECK(cosine_alpha_bar(k, 10, 0.008) == doctest::Approx(expected[k]).epsilon(1e-13));

  // The built schedule matches the raw curve wherever no clipping happens.
  const NoiseSchedule s = cosine_schedule(10, 0.008);
  for (int k = 0; k <= 9; ++k)
    CHECK(s.alpha_bar[k] == doctest::Approx(expected[k]).epsilon(1e-12));
}

TEST_CASE("schedule invariants across the searched K grid") {
  for (int K : {5, 10, 20, 30, 50}) {
    const NoiseSchedule s = cosine_schedule(K, 0.008);
    CHECK(s.alpha_bar[0] == 1.0);
    CHECK(s.alpha_bar[K] < 1e-3);
    for (int k = 1; k <= K; ++k) {
      CHECK(s.alpha_bar[k] < s.alpha_bar[k - 1]);
      CHECK(s.beta[k] > 0.0);
      CHECK(s.beta[k] < 1.0);
      CHECK(std::abs(s.alpha[k] * s.alpha_bar[k - 1] - s.alpha_bar[k]) <= 1e-12);
    }
  }
}

TEST_CASE("squared variant also satisfies the invariants") {
  const NoiseSchedule s = cosine_schedule(20, 0.008, true);
  CHECK(s.cosine_squared);
  CHECK(s.alpha_bar[0] == 1.0);
  CHECK(s.alpha_bar[20] < 1e-3);
  for (int k = 1; k <= 20; ++k) CHECK(s.alpha_bar[k] < s.alpha_bar[k - 1]);
  // Squared decays faster in the tail than the plain curve at the same k.
  const NoiseSchedule plain = cosine_schedule(20, 0.008, false);
  CHECK(s.alpha_bar[10] < plain.alpha_bar[10]);
}

TEST_CASE("invalid schedule arguments") {
  CHECK_THROWS_AS(cosine_schedule(0, 0.008), Error);
  CHECK_THROWS_AS(cosine_schedule(10, 0.0), Error);
  CHECK_THROWS_AS(cosine_schedule(10, -1.0), Error);
}

TEST_CASE("forward sample identities") {
  const NoiseSchedule s = cosine_schedule(10, 0.008);
  const std::vector<double> x0 = {0.3, -0.7, 1.0, 0.0};
  const std::vector<double> eps = {1.0, -2.0, 0.5, 0.25};

  SUBCASE("k = 0 returns x0 exactly") {
    const auto out = forward_sample(x0, eps, 0, s);
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(out[i] == x0[i]);
  }
  SUBCASE("zero noise scales by sqrt(alpha_bar)") {
    const std::vector<double> zero(x0.size(), 0.0);
    const auto out = forward_sample(x0, zero, 4, s);
    const double a = std::sqrt(s.alpha_bar[4]);
    for (std::size_t i = 0; i < x0.size(); ++i)
      CHECK(out[i] == doctest::Approx(a * x0[i]).epsilon(1e-15));
  }
  SUBCASE("shape mismatch rejected") {
    CHECK_THROWS_AS(forward_sample(x0, {1.0}, 2, s), Error);
  }
}

TEST_CASE("forward-process Monte Carlo moments") {
  const NoiseSchedule s = cosine_schedule(10, 0.008);
  Rng rng(42);
  const double x0 = 0.6;
  const int n = 10000;
  for (int k : {1, 3, 5, 8, 10}) {
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double eps = rng.normal();
      double xk;
      forward_sample(&x0, &eps, 1, k, s, &xk);
      sum += xk;
      sum2 += xk * xk;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    const double expect_mean = std::sqrt(s.alpha_bar[k]) * x0;
    const double expect_var = 1.0 - s.alpha_bar[k];
    const double se_mean = std::sqrt(expect_var / n);
    const double se_var = expect_var * std::sqrt(2.0 / (n - 1));
    CHECK(std::abs(mean - expect_mean) < 3.0 * se_mean);
    CHECK(std::abs(var - expect_var) < 3.0 * se_var);
  }
}

TEST_CASE("composed single-step chain matches the closed form in moments") {
  // x_k = sqrt(1-beta_k) x_{k-1} + sqrt(beta_k) z applied k times should have
  // the same first two moments as the closed-form sample at k.
  const NoiseSchedule s = cosine_schedule(8, 0.008);
  Rng rng(7);
  const double x0 = -0.4;
  const int n = 20000;
  const int k = 6;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = x0;
    for (int j = 1; j <= k; ++j)
      x = std::sqrt(1.0 - s.beta[j]) * x + std::sqrt(s.beta[j]) * rng.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double expect_mean = std::sqrt(s.alpha_bar[k]) * x0;
  const double expect_var = 1.0 - s.alpha_bar[k];
  CHECK(std::abs(mean - expect_mean) < 3.0 * std::sqrt(expect_var / n));
  CHECK(std::abs(var - expect_var) < 3.0 * expect_var * std::sqrt(2.0 / (n - 1)));
}

TEST_CASE("energy identity E|x_k|^2 = abar |x0|^2 + (1-abar) dim") {
  const NoiseSchedule s = cosine_schedule(10, 0.008);
  Rng rng(13);
  const int dim = 16;
  std::vector<double> x0(dim);
  for (auto& v : x0) v = rng.uniform(-1.0, 1.0);
  double x0_sq = 0.0;
  for (double v : x0) x0_sq += v * v;

  const int k = 5;
  const int n = 20000;
  double acc = 0.0;
  std::vector<double> eps(dim), out(dim);
  for (int i = 0; i < n; ++i) {
    for (auto& e : eps) e = rng.normal();
    forward_sample(x0.data(), eps.data(), dim, k, s, out.data());
    double sq = 0.0;
    for (double v : out) sq += v * v;
    acc += sq;
  }
  const double expect = s.alpha_bar[k] * x0_sq + (1.0 - s.alpha_bar[k]) * dim;
  CHECK(acc / n == doctest::Approx(expect).epsilon(0.02));
}
