#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bidgen/types.hpp"

namespace bidgen {

/// Fixed-order condition slots. The first slot, when present, is the
/// normalized return; the others are binary indicators.
struct ConditionLayout {
  std::vector<std::string> slots;

  static const std::vector<std::string>& known_slots();
  static ConditionLayout parse(const std::string& csv);  // e.g. "return,cpc_ok"
  void validate() const;
  int size() const { return static_cast<int>(slots.size()); }
  int index_of(const std::string& name) const;  // -1 if absent
  std::uint64_t hash() const;
  std::string to_string() const;
};

struct ConditionVector {
  std::vector<double> values;
  ConditionLayout layout;
};

/// (R - R_min) / (R_max - R_min), clipped to [0,1]. A degenerate range maps
/// every return to 0 with a logged warning.
double normalized_return(double r, double r_min, double r_max);

/// Inclusive indicator I(x <= C).
int binary_indicator(double x, double c);

/// Min-max bounds for the raw cost-per-value statistic, frozen over the
/// training dataset.
struct CpcNormalizer {
  double lo = 0.0;
  double hi = 1.0;

  double normalize(double raw) const;
};

struct StatValue {
  double value = 0.0;
  bool flagged = false;  // degenerate input (zero won value / zero spend)
};

/// Raw episode cost per unit of won value; zero-value episodes are flagged
/// and map to the normalized maximum.
double raw_cpc(const Trajectory& traj);
StatValue cpc_statistic(const Trajectory& traj, const CpcNormalizer& norm);

/// Mean absolute change of the per-period cost series: sum over T-1
/// adjacent differences, divided by T.
double smoothness_statistic(const std::vector<double>& costs);

/// Fraction of total spend that lands in the first half of the episode;
/// zero-spend episodes return 0.5 flagged.
StatValue early_spend_statistic(const std::vector<double>& costs);

/// Builds the fixed-order vector for the given layout. Unknown indicator
/// names are rejected; a missing return slot defaults to 1 (best trajectory).
ConditionVector compose_condition(std::optional<double> ret,
                                  const std::map<std::string, double>& indicators,
                                  const ConditionLayout& layout);

/// Frozen labeling context: layout, CPC normalization bounds and indicator
/// thresholds (dataset medians by default), plus return range.
struct ConditionContext {
  ConditionLayout layout;
  CpcNormalizer cpc_norm;
  double cpc_threshold = 0.5;         // on the normalized statistic
  double smoothness_threshold = 0.0;  // raw units
  double early_spend_threshold = 0.5;
  ReturnStats returns;

  std::uint64_t hash() const;
};

ConditionContext build_condition_context(const TrajectoryDataset& ds,
                                         const ConditionLayout& layout);

/// Condition vector for a logged trajectory under the frozen context.
std::vector<double> label_trajectory(const Trajectory& traj, const ConditionContext& ctx);

/// Model-facing dataset: normalized states, per-trajectory condition labels,
/// raw lambda sequences. The overload taking explicit stats normalizes with a
/// previously frozen range instead of the dataset's own.
TrainSet build_train_set(const TrajectoryDataset& ds, const ConditionContext& ctx);
TrainSet build_train_set(const TrajectoryDataset& ds, const ConditionContext& ctx,
                         const FeatureStats& stats);

}  // namespace bidgen
