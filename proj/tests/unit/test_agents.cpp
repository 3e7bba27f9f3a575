#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bidgen/agents.hpp"
#include "bidgen/errors.hpp"

using namespace bidgen;

TEST_CASE("pacing law fixed point: on-track spend leaves lambda unchanged") {
  PacingAgentConfig cfg;
  BidState s;
  s.remaining_time = 0.4;
  s.remaining_budget = 0.4;  // spent exactly the target fraction
  CHECK(pacing_lambda(s, 5.0, cfg) == doctest::Approx(5.0));
}

TEST_CASE("overspending decreases lambda") {
  PacingAgentConfig cfg;
  BidState s;
  s.remaining_time = 0.5;    // target spent = 0.5
  s.remaining_budget = 0.25; // actually spent 0.75
  const double next = pacing_lambda(s, 5.0, cfg);
  CHECK(next < 5.0);
}

TEST_CASE("direct evaluation of the control law") {
  PacingAgentConfig cfg;
  cfg.gain = 0.4;
  BidState s;
  // e = (1 - remaining_time) - (1 - remaining_budget) = 0.25
  s.remaining_time = 0.5;
  s.remaining_budget = 0.75;
  CHECK(pacing_lambda(s, 1.0, cfg) == doctest::Approx(1.1));
}

TEST_CASE("lambda stays within bounds") {
  PacingAgentConfig cfg;
  cfg.lambda_lo = 0.5;
  cfg.lambda_hi = 2.0;
  cfg.lambda_init = 1.0;
  cfg.gain = 10.0;
  BidState s;
  s.remaining_time = 0.0;
  s.remaining_budget = 1.0;  // massively behind: huge positive error
  CHECK(pacing_lambda(s, 1.9, cfg) == doctest::Approx(2.0));
  s.remaining_time = 1.0;
  s.remaining_budget = 0.0;  // hugely ahead: negative error
  CHECK(pacing_lambda(s, 0.6, cfg) == doctest::Approx(0.5));
}

TEST_CASE("invalid pacing config rejected") {
  PacingAgentConfig cfg;
  cfg.lambda_init = 0.001;  // below lambda_lo
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("explore with sigma 0 is the identity") {
  PacingAgentConfig bounds;
  Rng rng(1);
  const Action a{{3.0, 7.0}};
  const Action out = explore(a, rng, 0.0, bounds);
  CHECK(out.lambdas == a.lambdas);
}

TEST_CASE("explore clips to bounds") {
  PacingAgentConfig bounds;
  bounds.lambda_lo = 1.0;
  bounds.lambda_hi = 4.0;
  bounds.lambda_init = 2.0;
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const Action out = explore(Action{{3.0}}, rng, 1.5, bounds);
    CHECK(out.lambdas[0] >= 1.0);
    CHECK(out.lambdas[0] <= 4.0);
  }
}

TEST_CASE("explored log-multipliers match sigma empirically") {
  PacingAgentConfig bounds;
  bounds.lambda_lo = 1e-12;
  bounds.lambda_hi = 1e12;
  bounds.lambda_init = 1.0;
  Rng rng(3);
  const double sigma = 0.3;
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Action out = explore(Action{{1.0}}, rng, sigma, bounds);
    const double g = std::log(out.lambdas[0]);
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / n;
  const double stddev = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::abs(stddev - sigma) / sigma < 0.02);
}

TEST_CASE("negative sigma rejected") {
  PacingAgentConfig bounds;
  Rng rng(4);
  CHECK_THROWS_AS(explore(Action{{1.0}}, rng, -0.1, bounds), Error);
}

TEST_CASE("collect_dataset shapes and stats") {
  EnvConfig env;
  env.n_advertisers = 6;
  env.T = 12;
  env.n_min = 10;
  env.n_max = 30;
  PacingAgentConfig agent;

  SUBCASE("single trajectory") {
    const auto ds = collect_dataset(env, agent, 1, 0.0);
    REQUIRE(ds.size() == 1);
    CHECK(ds.trajectories[0].steps.size() == 12);
    CHECK(ds.return_stats.r_min == ds.return_stats.r_max);
  }

  SUBCASE("several trajectories, exploration on") {
    const auto ds = collect_dataset(env, agent, 8, 0.3);
    REQUIRE(ds.size() == 8);
    CHECK(ds.return_stats.r_max >= ds.return_stats.r_min);
    for (const auto& traj : ds.trajectories) {
      validate_trajectory(traj, env.T);
      CHECK(traj.total_cost() <= traj.budget + 1e-9);
    }
    // Logged advertiser rotates with the episode index.
    CHECK(ds.trajectories[0].advertiser_id == 0);
    CHECK(ds.trajectories[1].advertiser_id == 1);
  }

  SUBCASE("deterministic across calls and chunk counts") {
    // Episodes own independent derived seeds, so the chunk split cannot
    // change any value.
    const auto a = collect_dataset(env, agent, 6, 0.2, {123, 8});
    const auto b = collect_dataset(env, agent, 6, 0.2, {123, 3});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.trajectories[i].episode_seed == b.trajectories[i].episode_seed);
      CHECK(a.trajectories[i].total_return() == b.trajectories[i].total_return());
      CHECK(a.trajectories[i].total_cost() == b.trajectories[i].total_cost());
    }
  }

  SUBCASE("n must be positive") {
    CHECK_THROWS_AS(collect_dataset(env, agent, 0, 0.0), Error);
  }
}
