#pragma once

#include <utility>
#include <vector>

namespace bidgen {

struct OracleItem {
  double value = 0.0;
  double cost = 0.0;  // frozen second price against the recorded landscape
};

struct OracleResult {
  std::vector<int> selected;  // indices into the input list
  double total_value = 0.0;
  double total_cost = 0.0;
  double lambda_star = 0.0;  // 1 / cost-effectiveness of the boundary item
};

/// Greedy hindsight optimum: items ranked by value/cost descending (zero-cost
/// positive-value items first), taken while the budget holds; zero-value items
/// are never selected. Exact when all costs are equal; within one item's value
/// of the true optimum otherwise.
OracleResult hindsight_oracle(const std::vector<OracleItem>& impressions, double budget);

/// Exact 0/1 enumeration of max total value s.t. total cost <= budget.
/// Rejects more than 20 items.
double brute_force_oracle(const std::vector<OracleItem>& impressions, double budget);

std::vector<OracleItem> to_oracle_items(
    const std::vector<std::pair<double, double>>& impression_log);

}  // namespace bidgen
