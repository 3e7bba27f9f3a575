#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bidgen/errors.hpp"
#include "bidgen/rng.hpp"
#include "bidgen/types.hpp"

using namespace bidgen;

namespace {

Trajectory make_trajectory(Rng& rng, int T, double budget) {
  Trajectory traj;
  traj.budget = budget;
  traj.episode_seed = 7;
  traj.advertiser_id = 3;
  double spent = 0.0;
  double value_total = 0.0;
  double last_cost = 0.0, last_value = 0.0;
  StateGuards guards;
  for (int t = 0; t < T; ++t) {
    EpisodeContext ctx{T, spent, value_total, last_cost, last_value};
    StepRecord rec;
    rec.state = compute_state(ctx, budget, t, guards);
    rec.action.lambdas = {rng.uniform(0.0, 20.0)};
    rec.cost = rng.uniform(0.0, budget / (2.0 * T));
    rec.reward = rng.uniform(0.0, 3.0);
    spent += rec.cost;
    value_total += rec.reward;
    last_cost = rec.cost;
    last_value = rec.reward;
    traj.steps.push_back(rec);
  }
  return traj;
}

}  // namespace

TEST_CASE("episode start state") {
  EpisodeContext ctx{96, 0.0, 0.0, 0.0, 0.0};
  const BidState s = compute_state(ctx, 2000.0, 0);
  CHECK(s.remaining_time == 1.0);
  CHECK(s.remaining_budget == 1.0);
  CHECK(s.spend_speed == 0.0);
  CHECK(s.realtime_cost_efficiency == 0.0);
  CHECK(s.avg_cost_efficiency == 0.0);
}

TEST_CASE("midpoint arithmetic") {
  EpisodeContext ctx{96, 500.0, 120.0, 10.0, 2.0};
  const BidState s = compute_state(ctx, 2000.0, 48);
  CHECK(s.remaining_time == doctest::Approx(0.5));
  CHECK(s.remaining_budget == doctest::Approx(0.75));
}

TEST_CASE("zero-value period hits the epsilon guard and the clip") {
  StateGuards guards;  // epsilon 1e-6, ce_max 1000
  EpisodeContext ctx{96, 10.0, 0.0, 10.0, 0.0};
  const BidState s = compute_state(ctx, 2000.0, 1);
  // 10 / (0 + 1e-6) = 1e7, clipped.
  CHECK(s.realtime_cost_efficiency == doctest::Approx(guards.ce_max));
  CHECK(s.avg_cost_efficiency == doctest::Approx(guards.ce_max));
}

TEST_CASE("corrupted accounting is rejected") {
  EpisodeContext neg{96, -1.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(compute_state(neg, 2000.0, 1), Error);
  EpisodeContext over{96, 2100.0, 0.0, 0.0, 0.0};
  try {
    compute_state(over, 2000.0, 1);
    FAIL("expected corrupted_episode");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::corrupted_episode);
  }
  EpisodeContext ok{96, 0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(compute_state(ok, 2000.0, 96), Error);  // period out of range
  CHECK_THROWS_AS(compute_state(ok, 0.0, 0), Error);      // bad budget
}

TEST_CASE("normalization endpoints and midpoint") {
  CHECK(normalize_feature(2.0, 2.0, 10.0) == doctest::Approx(-1.0));
  CHECK(normalize_feature(10.0, 2.0, 10.0) == doctest::Approx(1.0));
  CHECK(normalize_feature(6.0, 2.0, 10.0) == doctest::Approx(0.0));
  // Degenerate feature maps to 0.
  CHECK(normalize_feature(5.0, 5.0, 5.0) == 0.0);
}

TEST_CASE("normalize/denormalize round-trip over random trajectories") {
  Rng rng(11);
  std::vector<Trajectory> trajectories;
  for (int i = 0; i < 100; ++i) trajectories.push_back(make_trajectory(rng, 32, 2000.0));
  const FeatureStats stats = FeatureStats::compute(trajectories);
  double max_err = 0.0;
  for (const auto& traj : trajectories) {
    const auto norm = normalize_trajectory(traj, stats);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const auto orig = traj.steps[t].state.to_array();
      for (int d = 0; d < BidState::kDim; ++d) {
        const double back = denormalize_feature(norm[t * BidState::kDim + d], stats.min[d],
                                                stats.max[d]);
        // Degenerate features decode to the observed constant.
        const double expect = stats.max[d] > stats.min[d] ? orig[d] : stats.min[d];
        max_err = std::max(max_err, std::abs(back - expect));
      }
    }
  }
  CHECK(max_err < 1e-9);
}

TEST_CASE("normalization output stays in [-1,1]") {
  Rng rng(5);
  std::vector<Trajectory> trajectories;
  for (int i = 0; i < 20; ++i) trajectories.push_back(make_trajectory(rng, 16, 1500.0));
  const FeatureStats stats = FeatureStats::compute(trajectories);
  for (const auto& traj : trajectories)
    for (double v : normalize_trajectory(traj, stats)) {
      CHECK(v >= -1.0 - 1e-12);
      CHECK(v <= 1.0 + 1e-12);
    }
}

TEST_CASE("non-finite features are rejected") {
  Rng rng(3);
  Trajectory traj = make_trajectory(rng, 8, 1000.0);
  traj.steps[2].state.spend_speed = std::nan("");
  const FeatureStats stats = FeatureStats::compute({});
  CHECK_THROWS_AS(normalize_trajectory(traj, stats), Error);
}

TEST_CASE("trajectory validation") {
  Rng rng(17);
  Trajectory traj = make_trajectory(rng, 24, 1000.0);
  validate_trajectory(traj, 24);

  SUBCASE("wrong length") { CHECK_THROWS_AS(validate_trajectory(traj, 25), Error); }
  SUBCASE("remaining_budget drift") {
    traj.steps[10].state.remaining_budget += 1e-3;
    CHECK_THROWS_AS(validate_trajectory(traj, 24), Error);
  }
  SUBCASE("negative cost") {
    traj.steps[4].cost = -0.5;
    CHECK_THROWS_AS(validate_trajectory(traj, 24), Error);
  }
}

TEST_CASE("return stats") {
  Rng rng(23);
  std::vector<Trajectory> trajectories;
  for (int i = 0; i < 10; ++i) trajectories.push_back(make_trajectory(rng, 12, 1200.0));
  const ReturnStats rs = ReturnStats::compute(trajectories);
  CHECK(rs.r_max >= rs.r_min);
  for (const auto& traj : trajectories) {
    CHECK(traj.total_return() >= rs.r_min - 1e-12);
    CHECK(traj.total_return() <= rs.r_max + 1e-12);
  }
}
