#pragma once

#include <string>
#include <vector>

#include "bidgen/eval.hpp"
#include "bidgen/types.hpp"

namespace bidgen {

struct CurveExport {
  std::vector<std::string> files;
  double completion_fraction = 0.0;  // episodes spending >= 80% of budget
};

/// Writes per-episode time series (remaining budget, cost, lambdas, reward),
/// aggregate percentile bands, and a budget-completion summary. Column order
/// is fixed and documented in each header row. Set `svg` to also emit a
/// line chart of the budget bands.
CurveExport export_curves(const std::vector<Trajectory>& episodes,
                          const std::string& out_dir, bool svg = false);

void write_metrics_csv(const std::vector<BudgetMetrics>& rows, const std::string& path);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

/// One row per (seed, advertiser): oracle value/cost and the boundary lambda.
struct OracleRow {
  std::uint64_t seed = 0;
  int advertiser = 0;
  double oracle_value = 0.0;
  double oracle_cost = 0.0;
  double lambda_star = 0.0;
};
void write_oracle_csv(const std::vector<OracleRow>& rows, const std::string& path);

}  // namespace bidgen
