#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace bidgen {

/// Observed advertiser status at the start of a period. Fields are raw
/// (un-normalized); min-max scaling to [-1,1] happens against frozen
/// dataset statistics at model boundaries.
struct BidState {
  static constexpr int kDim = 5;

  double remaining_time = 1.0;    // fraction of episode left, in [0,1]
  double remaining_budget = 1.0;  // fraction of budget left, in [0,1]
  double spend_speed = 0.0;       // budget fraction spent in the last period
  double realtime_cost_efficiency = 0.0;  // last-period cost per unit value, clipped
  double avg_cost_efficiency = 0.0;       // episode cost per unit value, clipped

  std::array<double, kDim> to_array() const {
    return {remaining_time, remaining_budget, spend_speed,
            realtime_cost_efficiency, avg_cost_efficiency};
  }
  static BidState from_array(const std::array<double, kDim>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
  }
  bool finite() const;
};

/// Bidding parameters for one period: lambdas[0] scales impression value,
/// lambdas[1..J] scale the constraint terms of the bid.
struct Action {
  std::vector<double> lambdas;

  bool finite() const;
};

struct StepRecord {
  BidState state;  // observed before acting
  Action action;
  double reward = 0.0;  // value won this period
  double cost = 0.0;    // money spent this period (Yuan)
};

struct Trajectory {
  std::vector<StepRecord> steps;
  double budget = 0.0;  // Yuan
  std::vector<double> constraint_bounds;
  std::uint64_t episode_seed = 0;
  int advertiser_id = 0;

  double total_return() const;
  double total_cost() const;
  std::vector<double> costs() const;  // per-period cost series
};

/// Guards applied when a period wins value 0: denominator floor and clip
/// ceiling for the two cost-efficiency features.
struct StateGuards {
  double epsilon = 1e-6;
  double ce_max = 1000.0;
};

/// Running episode totals feeding compute_state.
struct EpisodeContext {
  int horizon = 96;          // T, periods per episode
  double spent_total = 0.0;  // Yuan through the previous period
  double value_total = 0.0;  // won value through the previous period
  double last_cost = 0.0;    // the previous period alone
  double last_value = 0.0;
};

/// State observed at the start of `period`, from totals accumulated over
/// periods [0, period). Rejects corrupted accounting (negative or
/// over-budget spend beyond 1e-9 slack).
BidState compute_state(const EpisodeContext& ctx, double budget, int period,
                       const StateGuards& guards = {});

/// Per-feature min/max over every state in a dataset.
struct FeatureStats {
  std::array<double, BidState::kDim> min{};
  std::array<double, BidState::kDim> max{};

  static FeatureStats compute(const std::vector<Trajectory>& trajectories);
  bool approx_equal(const FeatureStats& other, double tol) const;
};

struct ReturnStats {
  double r_min = 0.0;
  double r_max = 0.0;

  static ReturnStats compute(const std::vector<Trajectory>& trajectories);
};

struct TrajectoryDataset {
  std::vector<Trajectory> trajectories;
  FeatureStats feature_stats;
  ReturnStats return_stats;

  std::size_t size() const { return trajectories.size(); }
  void recompute_stats();
};

/// x = 2*(v - min)/(max - min) - 1; degenerate features (max == min) map
/// to 0. Inverse of denormalize_feature on the observed range.
double normalize_feature(double v, double lo, double hi);
double denormalize_feature(double x, double lo, double hi);

/// Row-major T x 5 array of normalized state features in [-1, 1].
/// Rejects non-finite inputs.
std::vector<double> normalize_trajectory(const Trajectory& traj, const FeatureStats& stats);

std::vector<double> normalize_state(const BidState& s, const FeatureStats& stats);
BidState denormalize_state(const double* x, const FeatureStats& stats);

/// Checks the stored-trajectory invariants: length, budget feasibility and
/// remaining_budget consistency with the per-step cost series.
void validate_trajectory(const Trajectory& traj, int horizon, double tol = 1e-9);

/// Model-facing view of a dataset: normalized T x D state arrays, condition
/// vectors, and raw lambda sequences per trajectory.
struct TrainSet {
  int T = 0;
  int D = BidState::kDim;
  int cond_dim = 0;
  int action_dim = 0;
  std::vector<std::vector<double>> states;   // each T*D, row-major, in [-1,1]
  std::vector<std::vector<double>> conds;    // each cond_dim
  std::vector<std::vector<double>> actions;  // each T*action_dim, raw lambdas

  std::size_t size() const { return states.size(); }
};

}  // namespace bidgen
