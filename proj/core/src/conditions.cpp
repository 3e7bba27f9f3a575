#include "bidgen/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bidgen/errors.hpp"
#include "bidgen/util.hpp"

namespace bidgen {

const std::vector<std::string>& ConditionLayout::known_slots() {
  static const std::vector<std::string> names = {"return", "cpc_ok", "smoothness_ok",
                                                 "early_spend_ok"};
  return names;
}

ConditionLayout ConditionLayout::parse(const std::string& csv) {
  ConditionLayout layout;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    layout.slots.push_back(item.substr(b, e - b + 1));
  }
  layout.validate();
  return layout;
}

void ConditionLayout::validate() const {
  if (slots.empty()) fail(Errc::invalid_config, "condition layout must not be empty");
  const auto& known = known_slots();
  for (const auto& s : slots) {
    if (std::find(known.begin(), known.end(), s) == known.end())
      fail(Errc::unknown_condition, "unknown condition slot '" + s + "'");
    if (std::count(slots.begin(), slots.end(), s) != 1)
      fail(Errc::invalid_config, "duplicate condition slot '" + s + "'");
  }
}

int ConditionLayout::index_of(const std::string& name) const {
  const auto it = std::find(slots.begin(), slots.end(), name);
  return it == slots.end() ? -1 : static_cast<int>(it - slots.begin());
}

std::uint64_t ConditionLayout::hash() const {
  Digest d;
  d.add(static_cast<std::uint64_t>(slots.size()));
  for (const auto& s : slots) d.add_bytes(s.data(), s.size());
  return d.value();
}

std::string ConditionLayout::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (i) out += ',';
    out += slots[i];
  }
  return out;
}

double normalized_return(double r, double r_min, double r_max) {
  if (!(r_max > r_min)) {
    log_warn("normalized_return: degenerate return range, mapping to 0");
    return 0.0;
  }
  return std::clamp((r - r_min) / (r_max - r_min), 0.0, 1.0);
}

int binary_indicator(double x, double c) {
  if (!std::isfinite(x) || !std::isfinite(c))
    fail(Errc::invalid_argument, "binary_indicator: non-finite input");
  return x <= c ? 1 : 0;
}

double CpcNormalizer::normalize(double raw) const {
  if (!(hi > lo)) return 0.0;
  return std::clamp((raw - lo) / (hi - lo), 0.0, 1.0);
}

double raw_cpc(const Trajectory& traj) {
  const double value = traj.total_return();
  if (value <= 0.0) return -1.0;  // sentinel; callers flag it
  return traj.total_cost() / value;
}

StatValue cpc_statistic(const Trajectory& traj, const CpcNormalizer& norm) {
  const double raw = raw_cpc(traj);
  if (raw < 0.0) return {1.0, true};  // no won value: worst normalized CPC
  return {norm.normalize(raw), false};
}

double smoothness_statistic(const std::vector<double>& costs) {
  const std::size_t T = costs.size();
  if (T < 2) fail(Errc::invalid_argument, "smoothness_statistic: need T >= 2");
  double sum = 0.0;
  for (std::size_t t = 1; t < T; ++t) sum += std::abs(costs[t] - costs[t - 1]);
  return sum / static_cast<double>(T);
}

StatValue early_spend_statistic(const std::vector<double>& costs) {
  const std::size_t T = costs.size();
  if (T < 2) fail(Errc::invalid_argument, "early_spend_statistic: need T >= 2");
  double total = 0.0, early = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    total += costs[t];
    if (t < T / 2) early += costs[t];
  }
  if (total <= 0.0) return {0.5, true};
  return {early / total, false};
}

ConditionVector compose_condition(std::optional<double> ret,
                                  const std::map<std::string, double>& indicators,
                                  const ConditionLayout& layout) {
  layout.validate();
  for (const auto& [name, _] : indicators)
    if (layout.index_of(name) < 0)
      fail(Errc::unknown_condition, "indicator '" + name + "' not in layout");

  ConditionVector cv;
  cv.layout = layout;
  cv.values.assign(layout.slots.size(), 0.0);
  for (std::size_t i = 0; i < layout.slots.size(); ++i) {
    const auto& slot = layout.slots[i];
    if (slot == "return") {
      cv.values[i] = ret.value_or(1.0);  // default: request the best trajectory
    } else {
      const auto it = indicators.find(slot);
      cv.values[i] = it == indicators.end() ? 1.0 : it->second;
    }
  }
  return cv;
}

namespace {
double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}
}  // namespace

ConditionContext build_condition_context(const TrajectoryDataset& ds,
                                         const ConditionLayout& layout) {
  layout.validate();
  ConditionContext ctx;
  ctx.layout = layout;
  ctx.returns = ds.return_stats;

  if (layout.index_of("cpc_ok") >= 0) {
    std::vector<double> raws;
    for (const auto& traj : ds.trajectories) {
      const double r = raw_cpc(traj);
      if (r >= 0.0) raws.push_back(r);
    }
    if (!raws.empty()) {
      ctx.cpc_norm.lo = *std::min_element(raws.begin(), raws.end());
      ctx.cpc_norm.hi = *std::max_element(raws.begin(), raws.end());
      std::vector<double> normalized;
      normalized.reserve(raws.size());
      for (double r : raws) normalized.push_back(ctx.cpc_norm.normalize(r));
      ctx.cpc_threshold = median(std::move(normalized));
    }
  }
  if (layout.index_of("smoothness_ok") >= 0) {
    std::vector<double> stats;
    for (const auto& traj : ds.trajectories) stats.push_back(smoothness_statistic(traj.costs()));
    ctx.smoothness_threshold = median(std::move(stats));
  }
  if (layout.index_of("early_spend_ok") >= 0) {
    std::vector<double> stats;
    for (const auto& traj : ds.trajectories)
      stats.push_back(early_spend_statistic(traj.costs()).value);
    ctx.early_spend_threshold = median(std::move(stats));
  }
  return ctx;
}

std::uint64_t ConditionContext::hash() const {
  Digest d;
  d.add(layout.hash());
  d.add(cpc_norm.lo);
  d.add(cpc_norm.hi);
  d.add(cpc_threshold);
  d.add(smoothness_threshold);
  d.add(early_spend_threshold);
  d.add(returns.r_min);
  d.add(returns.r_max);
  return d.value();
}

std::vector<double> label_trajectory(const Trajectory& traj, const ConditionContext& ctx) {
  std::vector<double> values(ctx.layout.slots.size(), 0.0);
  for (std::size_t i = 0; i < ctx.layout.slots.size(); ++i) {
    const auto& slot = ctx.layout.slots[i];
    if (slot == "return") {
      values[i] =
          normalized_return(traj.total_return(), ctx.returns.r_min, ctx.returns.r_max);
    } else if (slot == "cpc_ok") {
      values[i] = binary_indicator(cpc_statistic(traj, ctx.cpc_norm).value, ctx.cpc_threshold);
    } else if (slot == "smoothness_ok") {
      values[i] =
          binary_indicator(smoothness_statistic(traj.costs()), ctx.smoothness_threshold);
    } else if (slot == "early_spend_ok") {
      values[i] =
          binary_indicator(early_spend_statistic(traj.costs()).value, ctx.early_spend_threshold);
    } else {
      fail(Errc::unknown_condition, "label_trajectory: slot '" + slot + "'");
    }
  }
  return values;
}

TrainSet build_train_set(const TrajectoryDataset& ds, const ConditionContext& ctx) {
  return build_train_set(ds, ctx, ds.feature_stats);
}

TrainSet build_train_set(const TrajectoryDataset& ds, const ConditionContext& ctx,
                         const FeatureStats& stats) {
  if (ds.trajectories.empty()) fail(Errc::invalid_argument, "build_train_set: empty dataset");
  TrainSet set;
  set.T = static_cast<int>(ds.trajectories.front().steps.size());
  set.D = BidState::kDim;
  set.cond_dim = ctx.layout.size();
  set.action_dim = static_cast<int>(ds.trajectories.front().steps.front().action.lambdas.size());
  set.states.reserve(ds.size());
  set.conds.reserve(ds.size());
  set.actions.reserve(ds.size());
  for (const auto& traj : ds.trajectories) {
    if (static_cast<int>(traj.steps.size()) != set.T)
      fail(Errc::shape_mismatch, "build_train_set: ragged trajectory lengths");
    set.states.push_back(normalize_trajectory(traj, stats));
    set.conds.push_back(label_trajectory(traj, ctx));
    std::vector<double> acts;
    acts.reserve(static_cast<std::size_t>(set.T) * set.action_dim);
    for (const auto& step : traj.steps) {
      if (static_cast<int>(step.action.lambdas.size()) != set.action_dim)
        fail(Errc::shape_mismatch, "build_train_set: ragged action lengths");
      acts.insert(acts.end(), step.action.lambdas.begin(), step.action.lambdas.end());
    }
    set.actions.push_back(std::move(acts));
  }
  return set;
}

}  // namespace bidgen
