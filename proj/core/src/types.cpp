#include "bidgen/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bidgen/errors.hpp"

namespace bidgen {

bool BidState::finite() const {
  for (double v : to_array())
    if (!std::isfinite(v)) return false;
  return true;
}

bool Action::finite() const {
  for (double v : lambdas)
    if (!std::isfinite(v)) return false;
  return true;
}

double Trajectory::total_return() const {
  double r = 0.0;
  for (const auto& s : steps) r += s.reward;
  return r;
}

double Trajectory::total_cost() const {
  double c = 0.0;
  for (const auto& s : steps) c += s.cost;
  return c;
}

std::vector<double> Trajectory::costs() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.cost);
  return out;
}

namespace {
double clipped_ce(double cost, double value, const StateGuards& g) {
  return std::min(cost / (value + g.epsilon), g.ce_max);
}
}  // namespace

BidState compute_state(const EpisodeContext& ctx, double budget, int period,
                       const StateGuards& guards) {
  if (budget <= 0.0) fail(Errc::invalid_argument, "compute_state: budget must be > 0");
  if (period < 0 || period >= ctx.horizon)
    fail(Errc::invalid_argument, "compute_state: period out of [0, T)");
  if (ctx.spent_total < 0.0 || ctx.value_total < 0.0 || ctx.last_cost < 0.0 ||
      ctx.last_value < 0.0)
    fail(Errc::corrupted_episode, "compute_state: negative running totals");
  if (ctx.spent_total > budget + 1e-9)
    fail(Errc::corrupted_episode, "compute_state: spend exceeds budget");

  BidState s;
  s.remaining_time = 1.0 - static_cast<double>(period) / ctx.horizon;
  s.remaining_budget = std::max(0.0, 1.0 - ctx.spent_total / budget);
  s.spend_speed = ctx.last_cost / budget;
  s.realtime_cost_efficiency = clipped_ce(ctx.last_cost, ctx.last_value, guards);
  s.avg_cost_efficiency = clipped_ce(ctx.spent_total, ctx.value_total, guards);
  return s;
}

FeatureStats FeatureStats::compute(const std::vector<Trajectory>& trajectories) {
  FeatureStats st;
  st.min.fill(std::numeric_limits<double>::infinity());
  st.max.fill(-std::numeric_limits<double>::infinity());
  for (const auto& traj : trajectories) {
    for (const auto& step : traj.steps) {
      const auto a = step.state.to_array();
      for (int d = 0; d < BidState::kDim; ++d) {
        st.min[d] = std::min(st.min[d], a[d]);
        st.max[d] = std::max(st.max[d], a[d]);
      }
    }
  }
  if (trajectories.empty()) {
    st.min.fill(0.0);
    st.max.fill(0.0);
  }
  return st;
}

bool FeatureStats::approx_equal(const FeatureStats& other, double tol) const {
  for (int d = 0; d < BidState::kDim; ++d) {
    if (std::abs(min[d] - other.min[d]) > tol) return false;
    if (std::abs(max[d] - other.max[d]) > tol) return false;
  }
  return true;
}

ReturnStats ReturnStats::compute(const std::vector<Trajectory>& trajectories) {
  ReturnStats rs;
  if (trajectories.empty()) return rs;
  rs.r_min = std::numeric_limits<double>::infinity();
  rs.r_max = -std::numeric_limits<double>::infinity();
  for (const auto& traj : trajectories) {
    const double r = traj.total_return();
    rs.r_min = std::min(rs.r_min, r);
    rs.r_max = std::max(rs.r_max, r);
  }
  return rs;
}

void TrajectoryDataset::recompute_stats() {
  feature_stats = FeatureStats::compute(trajectories);
  return_stats = ReturnStats::compute(trajectories);
}

double normalize_feature(double v, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return 2.0 * (v - lo) / (hi - lo) - 1.0;
}

double denormalize_feature(double x, double lo, double hi) {
  if (!(hi > lo)) return lo;
  return lo + (x + 1.0) * 0.5 * (hi - lo);
}

std::vector<double> normalize_trajectory(const Trajectory& traj, const FeatureStats& stats) {
  std::vector<double> out;
  out.reserve(traj.steps.size() * BidState::kDim);
  for (const auto& step : traj.steps) {
    const auto a = step.state.to_array();
    for (int d = 0; d < BidState::kDim; ++d) {
      if (!std::isfinite(a[d]))
        fail(Errc::non_finite, "normalize_trajectory: non-finite state feature");
      out.push_back(normalize_feature(a[d], stats.min[d], stats.max[d]));
    }
  }
  return out;
}

std::vector<double> normalize_state(const BidState& s, const FeatureStats& stats) {
  const auto a = s.to_array();
  std::vector<double> out(BidState::kDim);
  for (int d = 0; d < BidState::kDim; ++d) {
    if (!std::isfinite(a[d])) fail(Errc::non_finite, "normalize_state: non-finite feature");
    out[d] = normalize_feature(a[d], stats.min[d], stats.max[d]);
  }
  return out;
}

BidState denormalize_state(const double* x, const FeatureStats& stats) {
  std::array<double, BidState::kDim> a;
  for (int d = 0; d < BidState::kDim; ++d) {
    // Generated states may wander outside [-1,1]; clip at the boundary so
    // decoded features stay on the observed range.
    const double xc = std::clamp(x[d], -1.0, 1.0);
    a[d] = denormalize_feature(xc, stats.min[d], stats.max[d]);
  }
  return BidState::from_array(a);
}

void validate_trajectory(const Trajectory& traj, int horizon, double tol) {
  if (static_cast<int>(traj.steps.size()) != horizon)
    fail(Errc::shape_mismatch, "trajectory length " + std::to_string(traj.steps.size()) +
                                   " != T=" + std::to_string(horizon));
  if (traj.budget <= 0.0) fail(Errc::invalid_argument, "trajectory budget must be > 0");
  double spent = 0.0;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const auto& step = traj.steps[t];
    if (step.reward < 0.0 || step.cost < 0.0)
      fail(Errc::corrupted_episode, "negative reward or cost at step " + std::to_string(t));
    const double expected = 1.0 - spent / traj.budget;
    if (std::abs(step.state.remaining_budget - expected) > tol)
      fail(Errc::corrupted_episode,
           "remaining_budget mismatch at step " + std::to_string(t));
    spent += step.cost;
  }
  if (spent > traj.budget + tol)
    fail(Errc::corrupted_episode, "cumulative cost exceeds budget");
}

}  // namespace bidgen
